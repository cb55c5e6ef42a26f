#include "digsp/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "digsp/errors.hpp"
#include "digsp/rng.hpp"
#include "digsp/stats.hpp"

namespace digsp {

namespace {

// Feature slots as indices into kFeatureNames, for readable formulas below.
constexpr std::size_t kFc = 2;
constexpr std::size_t kAoverD = 3;
constexpr std::size_t kRho = 4;
constexpr std::size_t kDfAgg = 5;
constexpr std::size_t kVf = 6;
constexpr std::size_t kLfOverDf = 7;

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

// Header name -> column slot: 0..8 are features in canonical order, 9 is the
// target. Beam width appears in source tables as both "a" and "b", and
// effective depth as "d", so those aliases are accepted.
const std::unordered_map<std::string, std::size_t>& header_slots() {
    static const std::unordered_map<std::string, std::size_t> slots = {
        {"b_width", 0}, {"b", 0},      {"a", 0},
        {"d_eff", 1},   {"d", 1},
        {"fc", 2},      {"a_over_d", 3}, {"rho", 4},
        {"df_agg", 5},  {"vf", 6},     {"lf_over_df", 7},
        {"ff", 8},      {"vu", 9},
    };
    return slots;
}

std::string slot_name(std::size_t slot) {
    return slot < kFeatureCount ? std::string(kFeatureNames[slot]) : std::string(kTargetName);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::size_t feature_index(const std::string& name) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (name == kFeatureNames[i]) return i;
    }
    throw InputError("unknown feature name '" + name + "'");
}

std::vector<double> Dataset::column(std::size_t feature) const {
    if (feature >= kFeatureCount) throw StructuralError("feature index out of range");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[feature]);
    return out;
}

std::vector<double> Dataset::median_row() const {
    if (rows.empty()) throw InputError("median_row: empty dataset");
    std::vector<double> med(kFeatureCount);
    for (std::size_t j = 0; j < kFeatureCount; ++j) med[j] = median_of(column(j));
    return med;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw IngestionError("dataset file '" + path + "' is empty");
    // Strip a UTF-8 BOM if present.
    if (line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' && line[2] == '\xBF') {
        line.erase(0, 3);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto headers = split_fields(line);
    // Map each header to its schema slot and demand an exact schema match.
    std::vector<std::size_t> col_slot(headers.size());
    std::vector<bool> seen(kFeatureCount + 1, false);
    for (std::size_t c = 0; c < headers.size(); ++c) {
        const auto it = header_slots().find(lower(headers[c]));
        if (it == header_slots().end()) {
            throw IngestionError("unrecognized column '" + headers[c] + "' in '" + path + "'");
        }
        if (seen[it->second]) {
            throw IngestionError("duplicate column '" + slot_name(it->second) + "' in '" + path + "'");
        }
        seen[it->second] = true;
        col_slot[c] = it->second;
    }
    for (std::size_t s = 0; s <= kFeatureCount; ++s) {
        if (!seen[s]) throw IngestionError("missing column '" + slot_name(s) + "' in '" + path + "'");
    }

    Dataset ds;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != headers.size()) {
            throw IngestionError("row " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(headers.size()));
        }
        std::vector<double> row(kFeatureCount, 0.0);
        double target = 0.0;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v = 0.0;
            const auto& f = fields[c];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
                throw IngestionError("non-numeric value '" + f + "' at row " +
                                     std::to_string(line_no) + ", column " + slot_name(col_slot[c]));
            }
            if (!std::isfinite(v) || v <= 0.0) {
                throw IngestionError("physically implausible value " + f + " at row " +
                                     std::to_string(line_no) + ", column " + slot_name(col_slot[c]) +
                                     " (all quantities must be finite and strictly positive)");
            }
            if (col_slot[c] < kFeatureCount) {
                row[col_slot[c]] = v;
            } else {
                target = v;
            }
        }
        ds.rows.push_back(std::move(row));
        ds.target.push_back(target);
    }
    if (ds.rows.empty()) throw IngestionError("dataset file '" + path + "' has no data rows");
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write dataset file '" + path + "'");
    for (std::size_t j = 0; j < kFeatureCount; ++j) out << kFeatureNames[j] << ',';
    out << kTargetName << '\n';
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) out << format_double(ds.rows[i][j]) << ',';
        out << format_double(ds.target[i]) << '\n';
    }
    if (!out) throw IngestionError("failed writing dataset file '" + path + "'");
}

namespace {

ColumnDiagnostics column_diagnostics(const std::string& name, std::span<const double> v) {
    ColumnDiagnostics d;
    d.name = name;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    d.min = *mn;
    d.max = *mx;
    d.range = d.max - d.min;
    d.mean = mean_of(v);
    d.sd = sample_sd(v);
    d.median = median_of(v);
    d.skewness = sample_skewness(v);
    const double q1 = quantile_type7(v, 0.25);
    const double q3 = quantile_type7(v, 0.75);
    const double iqr = q3 - q1;
    const double lo = q1 - 1.5 * iqr;
    const double hi = q3 + 1.5 * iqr;
    std::size_t n_out = 0;
    for (double x : v) {
        if (x < lo || x > hi) ++n_out;
    }
    d.pct_outliers = 100.0 * static_cast<double>(n_out) / static_cast<double>(v.size());
    return d;
}

}  // namespace

std::vector<ColumnDiagnostics> diagnostics(const Dataset& ds) {
    if (ds.n_rows() < 4) throw InputError("diagnostics: need at least 4 rows");
    std::vector<ColumnDiagnostics> out;
    out.reserve(kFeatureCount + 1);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        out.push_back(column_diagnostics(kFeatureNames[j], ds.column(j)));
    }
    out.push_back(column_diagnostics(kTargetName, ds.target));
    return out;
}

void PartitionScheme::validate() const {
    if (groups.empty()) throw ConfigError("partition scheme '" + name + "' has no groups");
    for (const auto& g : groups) {
        if (g.features.empty()) {
            throw ConfigError("partition group '" + g.name + "' is empty");
        }
        std::vector<bool> used(kFeatureCount, false);
        for (std::size_t f : g.features) {
            if (f >= kFeatureCount) {
                throw ConfigError("partition group '" + g.name + "' references a feature out of range");
            }
            if (used[f]) {
                throw ConfigError("partition group '" + g.name + "' lists '" +
                                  std::string(kFeatureNames[f]) + "' twice");
            }
            used[f] = true;
        }
    }
}

PartitionScheme partition_scheme(const std::string& name) {
    const auto idx = [](const char* n) { return feature_index(n); };
    PartitionScheme s;
    s.name = name;
    if (name == "full") {
        s.groups = {
            {"fiber", {idx("Vf"), idx("lf_over_df"), idx("a_over_d"), idx("b_width"), idx("d_eff")}},
            {"concrete", {idx("fc"), idx("df_agg"), idx("a_over_d"), idx("d_eff")}},
            {"steel", {idx("rho"), idx("b_width"), idx("d_eff"), idx("a_over_d")}},
        };
    } else if (name == "minimal") {
        s.groups = {
            {"fiber", {idx("Vf"), idx("a_over_d")}},
            {"concrete", {idx("fc"), idx("a_over_d")}},
            {"steel", {idx("rho"), idx("a_over_d")}},
        };
    } else if (name == "bgp") {
        FeatureGroup all;
        all.name = "all";
        all.features.resize(kFeatureCount);
        std::iota(all.features.begin(), all.features.end(), 0);
        s.groups = {std::move(all)};
    } else {
        throw ConfigError("unknown partition scheme '" + name + "' (expected full, minimal, or bgp)");
    }
    s.validate();
    return s;
}

PartitionScheme default_partitions() { return partition_scheme("full"); }

void SplitSpec::validate() const {
    if (train_fraction < 0.0 || val_fraction < 0.0 || test_fraction < 0.0) {
        throw ConfigError("split fractions must be non-negative");
    }
    const double sum = train_fraction + val_fraction + test_fraction;
    if (std::abs(sum - 1.0) > 1e-12) {
        throw ConfigError("split fractions must sum to 1 (got " + format_double(sum) + ")");
    }
}

SplitIndices split(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = ds.n_rows();
    if (n < 10) throw InputError("split: need at least 10 rows");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng.uniform_index(i + 1);
        std::swap(order[i], order[j]);
    }

    const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test_fraction * static_cast<double>(n)));
    const std::size_t n_train = n - n_val - n_test;

    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    out.test.assign(order.begin() + n_train + n_val, order.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.rows.reserve(indices.size());
    out.target.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= ds.n_rows()) throw StructuralError("subset index out of range");
        out.rows.push_back(ds.rows[i]);
        out.target.push_back(ds.target[i]);
    }
    return out;
}

std::array<double, 3> synth_true_terms(std::span<const double> row) {
    if (row.size() != kFeatureCount) throw InputError("synth_true_terms: row has wrong width");
    // The three mechanisms are built so that their cross-population marginals
    // vanish: steel depends only on rho, fiber only on Vf*lf_over_df (all
    // exclusive to their groups), and the concrete interaction uses a
    // strength-ratio hump s(q) centered so that E[s - kSBar] = 0 under the
    // sampling distribution. Averaging the concrete term over fc and df_agg
    // therefore leaves no a_over_d signal for the steel or fiber populations
    // to absorb, which keeps the fused cross-population model additive. The
    // centered-hump-times-span product itself is not expressible as a sum of
    // single-variable transforms, so a purely additive model leaves a large
    // remainder regardless of how many one-variable shapes it stacks.
    const double ad = row[kAoverD];
    const double q = row[kFc] / (75.0 * row[kDfAgg]);
    const double su = (q - 1.5) / 0.65;
    const double s = 1.0 / (1.0 + su * su);
    const double g = 2.37 - 0.50 * ad;
    // E[s] over fc ~ U[20.6, 111.5], df_agg ~ U[0.5, 1.0] (midpoint quadrature).
    constexpr double kSBar = 0.6403351356;
    const double concrete = 2.2 + 3.45 * (s - kSBar) * g;
    const double steel = 3.3 * row[kRho] / (row[kRho] + 4.0);
    const double fiber_factor = row[kVf] * row[kLfOverDf];
    const double fiber = 3.2 * fiber_factor / (fiber_factor + 60.0);
    return {concrete, steel, fiber};
}

Dataset synth_superposition(std::size_t n, double noise_sd, std::uint64_t seed) {
    if (n == 0) throw InputError("synth_superposition: n must be positive");
    if (noise_sd < 0.0) throw InputError("synth_superposition: noise_sd must be non-negative");
    Rng rng(seed);
    Dataset ds;
    ds.rows.reserve(n);
    ds.target.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(kFeatureCount);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            row[j] = rng.uniform(kFeatureRanges[j].first, kFeatureRanges[j].second);
        }
        const auto terms = synth_true_terms(row);
        const double y_det = terms[0] + terms[1] + terms[2];
        double y = y_det;
        if (noise_sd > 0.0) {
            do {
                y = y_det + rng.gaussian(0.0, noise_sd);
            } while (y <= 0.0);
        }
        ds.rows.push_back(std::move(row));
        ds.target.push_back(y);
    }
    return ds;
}

}  // namespace digsp
