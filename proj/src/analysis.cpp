#include "digsp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "digsp/data.hpp"
#include "digsp/errors.hpp"
#include "digsp/rng.hpp"
#include "digsp/stats.hpp"

namespace digsp {

SummaryStats summarize(std::span<const double> values) {
    SummaryStats s;
    s.median = median_of(values);
    s.iqr = quantile_type7(values, 0.75) - quantile_type7(values, 0.25);
    s.mean = mean_of(values);
    s.sd = sample_sd(values);
    return s;
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // Positions i..j (0-based) share the average 1-based rank.
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace {

// Sum over tied groups of (t^3 - t), the shared tie-correction ingredient.
double tie_correction_sum(std::span<const double> values) {
    std::map<double, std::size_t> counts;
    for (double v : values) counts[v] += 1;
    double s = 0.0;
    for (const auto& [value, t] : counts) {
        (void)value;
        const double td = static_cast<double>(t);
        s += td * td * td - td;
    }
    return s;
}

std::vector<double> pooled(std::span<const double> a, std::span<const double> b) {
    std::vector<double> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    return all;
}

double rank_sum_statistic(std::span<const double> a, std::span<const double> b) {
    const auto ranks = average_ranks(pooled(a, b));
    double w = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) w += ranks[i];
    return w;
}

}  // namespace

double rank_sum_p_exact(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InputError("rank-sum test requires non-empty samples");
    const std::size_t m = a.size();
    const std::size_t n_total = m + b.size();
    const auto ranks = average_ranks(pooled(a, b));

    // Doubled ranks are exact integers even under average-rank ties, so the
    // conditional permutation distribution is a subset-sum count.
    std::vector<long long> d(n_total);
    long long s_all = 0;
    for (std::size_t i = 0; i < n_total; ++i) {
        d[i] = std::llround(2.0 * ranks[i]);
        s_all += d[i];
    }
    long long w2 = 0;
    for (std::size_t i = 0; i < m; ++i) w2 += d[i];

    // dp[j][s]: subsets of size j with doubled-rank sum s. Counts stay below
    // 2^53 for every size this path is used for, so doubles hold them exactly.
    std::vector<std::vector<double>> dp(m + 1, std::vector<double>(s_all + 1, 0.0));
    dp[0][0] = 1.0;
    std::size_t processed = 0;
    for (std::size_t i = 0; i < n_total; ++i) {
        ++processed;
        const std::size_t j_hi = std::min(m, processed);
        for (std::size_t j = j_hi; j >= 1; --j) {
            for (long long s = s_all; s >= d[i]; --s) {
                dp[j][s] += dp[j - 1][s - d[i]];
            }
        }
    }

    double total = 0.0;
    double le = 0.0;
    double ge = 0.0;
    for (long long s = 0; s <= s_all; ++s) {
        const double c = dp[m][s];
        total += c;
        if (s <= w2) le += c;
        if (s >= w2) ge += c;
    }
    return std::min(1.0, 2.0 * std::min(le / total, ge / total));
}

double rank_sum_p_normal(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InputError("rank-sum test requires non-empty samples");
    const double m = static_cast<double>(a.size());
    const double n = static_cast<double>(b.size());
    const double N = m + n;
    const double w = rank_sum_statistic(a, b);
    const double mean = m * (N + 1.0) / 2.0;
    const auto all = pooled(a, b);
    const double ties = tie_correction_sum(all);
    const double var = m * n / 12.0 * ((N + 1.0) - ties / (N * (N - 1.0)));
    if (var <= 1e-12) return 1.0;  // everything tied
    const double sd = std::sqrt(var);
    double z = 0.0;
    if (w > mean) {
        z = (w - mean - 0.5) / sd;
    } else if (w < mean) {
        z = (w - mean + 0.5) / sd;
    }
    return std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
}

RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InputError("rank-sum test requires non-empty samples");
    RankSumResult r;
    r.statistic = rank_sum_statistic(a, b);
    r.exact = a.size() < 15 && b.size() < 15;
    r.p_two_sided = r.exact ? rank_sum_p_exact(a, b) : rank_sum_p_normal(a, b);
    return r;
}

namespace {

struct SignedRankStat {
    double w = 0.0;               // positive-delta rank sum
    std::vector<double> abs_d;    // |delta| of the non-zero deltas
};

SignedRankStat signed_rank_statistic(std::span<const double> nonzero) {
    SignedRankStat s;
    s.abs_d.reserve(nonzero.size());
    for (double d : nonzero) s.abs_d.push_back(std::abs(d));
    const auto ranks = average_ranks(s.abs_d);
    for (std::size_t i = 0; i < nonzero.size(); ++i) {
        if (nonzero[i] > 0.0) s.w += ranks[i];
    }
    return s;
}

}  // namespace

double signed_rank_p_exact(std::span<const double> nonzero_deltas, Alternative alternative) {
    if (nonzero_deltas.empty()) throw InputError("signed-rank test requires non-zero deltas");
    const std::size_t n = nonzero_deltas.size();
    const auto stat = signed_rank_statistic(nonzero_deltas);
    const auto ranks = average_ranks(stat.abs_d);

    long long s_all = 0;
    std::vector<long long> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = std::llround(2.0 * ranks[i]);
        s_all += d[i];
    }
    const long long w2 = std::llround(2.0 * stat.w);

    // cnt[s]: sign assignments whose positive-rank doubled sum is s.
    std::vector<double> cnt(s_all + 1, 0.0);
    cnt[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (long long s = s_all; s >= d[i]; --s) cnt[s] += cnt[s - d[i]];
    }

    const double total = std::pow(2.0, static_cast<double>(n));
    double le = 0.0;
    double ge = 0.0;
    for (long long s = 0; s <= s_all; ++s) {
        if (s <= w2) le += cnt[s];
        if (s >= w2) ge += cnt[s];
    }
    if (alternative == Alternative::Greater) return ge / total;
    return std::min(1.0, 2.0 * std::min(le / total, ge / total));
}

double signed_rank_p_normal(std::span<const double> nonzero_deltas, Alternative alternative) {
    if (nonzero_deltas.empty()) throw InputError("signed-rank test requires non-zero deltas");
    const double n = static_cast<double>(nonzero_deltas.size());
    const auto stat = signed_rank_statistic(nonzero_deltas);
    const double mean = n * (n + 1.0) / 4.0;
    const double ties = tie_correction_sum(stat.abs_d);
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    if (var <= 1e-12) return 1.0;
    const double sd = std::sqrt(var);

    if (alternative == Alternative::Greater) {
        const double z = (stat.w - mean - 0.5) / sd;
        return 1.0 - normal_cdf(z);
    }
    double z = 0.0;
    if (stat.w > mean) {
        z = (stat.w - mean - 0.5) / sd;
    } else if (stat.w < mean) {
        z = (stat.w - mean + 0.5) / sd;
    }
    return std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
}

PairedTestResult wilcoxon_signed_rank(std::span<const double> deltas, Alternative alternative) {
    if (deltas.empty()) throw InputError("signed-rank test requires deltas");

    PairedTestResult r;
    r.deltas.assign(deltas.begin(), deltas.end());

    std::vector<double> nonzero;
    std::size_t wins = 0;
    for (double d : deltas) {
        if (d > 0.0) ++wins;
        if (d != 0.0) nonzero.push_back(d);
    }
    if (nonzero.empty()) throw InputError("signed-rank test: every delta is zero");

    r.n_nonzero = nonzero.size();
    r.win_fraction = static_cast<double>(wins) / static_cast<double>(deltas.size());
    r.w_statistic = signed_rank_statistic(nonzero).w;
    const double s_max = static_cast<double>(r.n_nonzero) *
                         (static_cast<double>(r.n_nonzero) + 1.0) / 2.0;
    r.rank_biserial = 2.0 * r.w_statistic / s_max - 1.0;
    r.exact = r.n_nonzero < 15;
    r.p_value = r.exact ? signed_rank_p_exact(nonzero, alternative)
                        : signed_rank_p_normal(nonzero, alternative);
    return r;
}

std::pair<double, double> bootstrap_ci_mean(std::span<const double> values, int n_boot,
                                            double level, std::uint64_t seed) {
    if (values.size() < 2) throw InputError("bootstrap CI requires at least 2 values");
    if (n_boot < 1) throw InputError("bootstrap CI requires n_boot >= 1");
    if (!(level > 0.0 && level < 1.0)) throw InputError("bootstrap level must be in (0, 1)");

    Rng rng(seed);
    const std::size_t n = values.size();
    std::vector<double> means;
    means.reserve(n_boot);
    for (int b = 0; b < n_boot; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[rng.uniform_index(n)];
        means.push_back(s / static_cast<double>(n));
    }
    const double tail = (1.0 - level) / 2.0;
    return {quantile_type7(means, tail), quantile_type7(means, 1.0 - tail)};
}

double elasticity(const EnsembleModel& model, std::span<const double> x_median,
                  std::size_t variable, double epsilon,
                  const AbstractionRegistry* registry) {
    if (!(epsilon > 0.0)) throw InputError("elasticity: epsilon must be positive");
    if (variable >= x_median.size()) throw InputError("elasticity: variable index out of range");

    std::vector<std::vector<double>> rows{std::vector<double>(x_median.begin(), x_median.end())};
    const double base = predict_full(model, rows, registry)[0];
    if (base == 0.0) throw InputError("elasticity undefined: prediction at the median point is zero");

    rows[0][variable] *= 1.0 + epsilon;
    const double perturbed = predict_full(model, rows, registry)[0];
    return (perturbed - base) / (epsilon * base);
}

namespace {

// Mechanism ownership of raw features; geometry columns are shared context
// and neutral for attribution.
const char* variable_mechanism(std::size_t feature) {
    switch (feature) {
        case 2:  // fc
        case 5:  // df_agg
            return "concrete";
        case 4:  // rho
            return "steel";
        case 6:  // Vf
        case 7:  // lf_over_df
        case 8:  // ff
            return "fiber";
        default:  // b_width, d_eff, a_over_d
            return nullptr;
    }
}

bool is_mechanism_population(const std::string& id) {
    return id == "fiber" || id == "concrete" || id == "steel";
}

/// Bucket for one gene by the mechanisms its variables touch.
std::string classify_gene(const ExprTree& gene, const AbstractionRegistry* registry) {
    ExprTree expanded = gene;
    bool has_abstracted = false;
    for (const auto& n : gene.nodes()) {
        if (n.kind == NodeKind::Abstracted) {
            has_abstracted = true;
            break;
        }
    }
    if (has_abstracted) {
        if (registry == nullptr) {
            throw StructuralError("gene classification needs a registry for abstracted terminals");
        }
        expanded = expand_abstractions(gene, *registry);
    }
    std::set<std::string> mechanisms;
    for (const auto& n : expanded.nodes()) {
        if (n.kind != NodeKind::Variable) continue;
        if (const char* m = variable_mechanism(static_cast<std::size_t>(n.index))) {
            mechanisms.insert(m);
        }
    }
    if (mechanisms.size() == 1) return *mechanisms.begin();
    return "mixed";  // several mechanisms, or geometry/constants only
}

}  // namespace

ContributionBreakdown mechanism_contributions(const EnsembleModel& model,
                                              std::span<const double> x_median,
                                              const AbstractionRegistry* registry) {
    if (model.members.empty()) throw InputError("mechanism_contributions: empty model");
    if (x_median.size() != kFeatureCount) {
        throw InputError("mechanism_contributions: median point does not carry the full schema");
    }

    std::map<std::string, double> buckets;
    bool gene_attribution_used = false;
    double intercept = model.fusion.intercept;

    const std::vector<std::vector<double>> rows{
        std::vector<double>(x_median.begin(), x_median.end())};
    for (std::size_t j = 0; j < model.members.size(); ++j) {
        const auto& member = model.members[j];
        const double w = model.fusion.beta[j];
        if (is_mechanism_population(member.population_id)) {
            const double pred = individual_predict(member.individual, rows, registry)[0];
            buckets[member.population_id] += w * pred;
        } else {
            // Monolithic member: attribute gene by gene via variable ownership.
            gene_attribution_used = true;
            const LinearFit& fit = *member.individual.fit;
            for (std::size_t g = 0; g < member.individual.genes.size(); ++g) {
                const double gv = member.individual.genes[g].evaluate(rows[0], registry);
                buckets[classify_gene(member.individual.genes[g], registry)] +=
                    w * fit.beta[g] * gv;
            }
            intercept += w * fit.intercept;
        }
    }

    ContributionBreakdown out;
    out.intercept = intercept;
    double total_abs = 0.0;
    for (const auto& [name, c] : buckets) {
        (void)name;
        total_abs += std::abs(c);
    }
    for (const char* name : {"fiber", "concrete", "steel", "mixed"}) {
        const auto it = buckets.find(name);
        if (it == buckets.end()) {
            // Emit an explicit zero row for the mixed bucket only when gene
            // attribution was in play; mechanism rows always appear.
            if (std::string(name) == "mixed" && !gene_attribution_used) continue;
            out.mechanisms.push_back({name, 0.0, 0.0});
            continue;
        }
        MechanismContribution mc;
        mc.mechanism = name;
        mc.contribution = it->second;
        mc.share_pct = total_abs > 0.0 ? 100.0 * std::abs(it->second) / total_abs : 0.0;
        out.mechanisms.push_back(mc);
    }
    return out;
}

ExprTree materialize_closed_form(const EnsembleModel& model,
                                 const AbstractionRegistry* registry) {
    if (model.members.empty()) throw InputError("materialize_closed_form: empty model");

    const auto expand = [&](ExprTree t) {
        for (const auto& n : t.nodes()) {
            if (n.kind == NodeKind::Abstracted) {
                if (registry == nullptr) {
                    throw StructuralError("closed form needs a registry for abstracted terminals");
                }
                return expand_abstractions(t, *registry);
            }
        }
        return t;
    };

    ExprTree total;
    bool have = false;
    for (std::size_t j = 0; j < model.members.size(); ++j) {
        const double w = model.fusion.beta[j];
        if (w == 0.0) continue;
        ExprTree expr = expand(fused_expression(model.members[j].individual));
        ExprTree term = (w == 1.0)
                            ? std::move(expr)
                            : ExprTree::binary(BinaryOp::Mul, ExprTree::constant(w), std::move(expr));
        total = have ? ExprTree::binary(BinaryOp::Add, std::move(total), std::move(term))
                     : std::move(term);
        have = true;
    }
    if (!have) return ExprTree::constant(model.fusion.intercept);
    if (model.fusion.intercept != 0.0) {
        total = ExprTree::binary(BinaryOp::Add, std::move(total),
                                 ExprTree::constant(model.fusion.intercept));
    }
    return total;
}

namespace {

constexpr unsigned long long kTermCountCap = 1000000000000000ULL;  // 10^15

unsigned long long sat_add(unsigned long long a, unsigned long long b) {
    const unsigned long long s = a + b;
    return (s < a || s > kTermCountCap) ? kTermCountCap : s;
}

unsigned long long sat_mul(unsigned long long a, unsigned long long b) {
    if (a != 0 && b > kTermCountCap / a) return kTermCountCap;
    const unsigned long long p = a * b;
    return p > kTermCountCap ? kTermCountCap : p;
}

unsigned long long count_terms(const std::vector<Node>& nodes, std::size_t i) {
    const Node& n = nodes[i];
    if (n.kind != NodeKind::BinaryOp) return 1;
    const std::size_t left = i + 1;
    const std::size_t right = left + static_cast<std::size_t>(nodes[left].subtree);
    switch (n.op) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
            return sat_add(count_terms(nodes, left), count_terms(nodes, right));
        case BinaryOp::Mul:
            return sat_mul(count_terms(nodes, left), count_terms(nodes, right));
        case BinaryOp::Div:
            return count_terms(nodes, left);
    }
    return 1;
}

}  // namespace

unsigned long long additive_term_count(const ExprTree& tree) {
    return count_terms(tree.nodes(), 0);
}

ParsimonyProfile parsimony(const EnsembleModel& model, const AbstractionRegistry* registry) {
    const ExprTree closed = materialize_closed_form(model, registry);
    const TreeMetrics m = metrics(closed);
    ParsimonyProfile p;
    p.n_terms = additive_term_count(closed);
    p.tree_size_nodes = m.node_count;
    p.operator_count = m.operator_count;
    return p;
}

}  // namespace digsp
