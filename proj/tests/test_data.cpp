#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "digsp/data.hpp"
#include "digsp/errors.hpp"
#include "digsp/stats.hpp"
#include "doctest.h"

using namespace digsp;

namespace {

std::string temp_path(const std::string& name) { return "/tmp/digsp_test_" + name; }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

Dataset tiny_dataset(std::size_t n) {
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(kFeatureCount);
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            row[j] = kFeatureRanges[j].first +
                     (kFeatureRanges[j].second - kFeatureRanges[j].first) *
                         (0.1 + 0.8 * static_cast<double>((i * 7 + j * 3) % 11) / 10.0);
        ds.rows.push_back(std::move(row));
        ds.target.push_back(1.0 + static_cast<double>(i % 13));
    }
    return ds;
}

} // namespace

TEST_CASE("feature_index resolves canonical names only") {
    CHECK(feature_index("b_width") == 0);
    CHECK(feature_index("ff") == 8);
    CHECK_THROWS_AS(feature_index("vu"), InputError);
    CHECK_THROWS_AS(feature_index("nope"), InputError);
}

TEST_CASE("CSV save/load round-trips a dataset exactly") {
    const Dataset ds = tiny_dataset(12);
    const std::string path = temp_path("roundtrip.csv");
    save_csv(ds, path);
    const Dataset back = load_csv(path);
    REQUIRE(back.n_rows() == ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        CHECK(back.target[i] == ds.target[i]);
        for (std::size_t j = 0; j < kFeatureCount; ++j) CHECK(back.rows[i][j] == ds.rows[i][j]);
    }
    std::remove(path.c_str());
}

TEST_CASE("CSV ingestion accepts aliases and shuffled column order") {
    const std::string path = temp_path("alias.csv");
    // "b"/"d" are accepted aliases for beam width and effective depth, headers
    // are case-insensitive, and column order is free.
    write_file(path,
               "Vu,B,D,FC,a_over_d,RHO,df_agg,vf,lf_over_df,ff\n"
               "100,300,420,35,2.5,2.1,0.7,1.0,60,3.2\n");
    const Dataset ds = load_csv(path);
    REQUIRE(ds.n_rows() == 1);
    CHECK(ds.target[0] == 100.0);
    CHECK(ds.rows[0][feature_index("b_width")] == 300.0);
    CHECK(ds.rows[0][feature_index("d_eff")] == 420.0);
    CHECK(ds.rows[0][feature_index("fc")] == 35.0);
    CHECK(ds.rows[0][feature_index("lf_over_df")] == 60.0);
    std::remove(path.c_str());
}

TEST_CASE("CSV ingestion rejects schema violations with the offending location") {
    const std::string path = temp_path("bad.csv");

    write_file(path, "b,d,fc\n1,2,3\n");
    CHECK_THROWS_AS(load_csv(path), IngestionError);  // incomplete schema

    write_file(path,
               "vu,b,d,fc,a_over_d,rho,df_agg,vf,lf_over_df,ff,extra\n"
               "1,2,3,4,5,6,7,8,9,10,11\n");
    CHECK_THROWS_AS(load_csv(path), IngestionError);  // unknown column

    write_file(path,
               "vu,b,d,fc,a_over_d,rho,df_agg,vf,lf_over_df,ff\n"
               "1,2,3,4,5,6,7,8,9\n");
    CHECK_THROWS_AS(load_csv(path), IngestionError);  // short row

    write_file(path,
               "vu,b,d,fc,a_over_d,rho,df_agg,vf,lf_over_df,ff\n"
               "1,2,3,4,5,-6,7,8,9,10\n");
    CHECK_THROWS_AS(load_csv(path), IngestionError);  // non-positive value

    write_file(path,
               "vu,b,d,fc,a_over_d,rho,df_agg,vf,lf_over_df,ff\n"
               "1,2,3,4,5,abc,7,8,9,10\n");
    CHECK_THROWS_AS(load_csv(path), IngestionError);  // unparsable value

    write_file(path,
               "vu,b,d,fc,a_over_d,rho,df_agg,vf,lf_over_df,ff\n"
               "1,2,3,4,5,6,7,8,9,10\n"
               "1,2,3,4,5,6,7,8,9,10\n");
    CHECK_NOTHROW(load_csv(path));  // control: the valid variant loads

    CHECK_THROWS_AS(load_csv("/tmp/does_not_exist_digsp.csv"), IngestionError);
    std::remove(path.c_str());
}

TEST_CASE("column diagnostics agree with a brute-force oracle") {
    const Dataset ds = tiny_dataset(40);
    const std::vector<ColumnDiagnostics> diags = diagnostics(ds);
    REQUIRE(diags.size() == kFeatureCount + 1);
    CHECK(diags.back().name == std::string(kTargetName));

    for (std::size_t c = 0; c <= kFeatureCount; ++c) {
        std::vector<double> col;
        for (std::size_t i = 0; i < ds.n_rows(); ++i)
            col.push_back(c < kFeatureCount ? ds.rows[i][c] : ds.target[i]);

        const double mn = *std::min_element(col.begin(), col.end());
        const double mx = *std::max_element(col.begin(), col.end());
        CHECK(diags[c].min == doctest::Approx(mn).epsilon(1e-10));
        CHECK(diags[c].max == doctest::Approx(mx).epsilon(1e-10));
        CHECK(diags[c].range == doctest::Approx(mx - mn).epsilon(1e-10));
        CHECK(diags[c].mean == doctest::Approx(mean_of(col)).epsilon(1e-10));
        CHECK(diags[c].sd == doctest::Approx(sample_sd(col)).epsilon(1e-10));
        CHECK(diags[c].median == doctest::Approx(median_of(col)).epsilon(1e-10));
        CHECK(diags[c].skewness == doctest::Approx(sample_skewness(col)).epsilon(1e-10));

        const double q1 = quantile_type7(col, 0.25);
        const double q3 = quantile_type7(col, 0.75);
        const double lo = q1 - 1.5 * (q3 - q1);
        const double hi = q3 + 1.5 * (q3 - q1);
        int outliers = 0;
        for (double x : col)
            if (x < lo || x > hi) ++outliers;
        const double pct = 100.0 * outliers / static_cast<double>(col.size());
        CHECK(diags[c].pct_outliers == doctest::Approx(pct).epsilon(1e-10));
    }

    const Dataset small = tiny_dataset(3);
    CHECK_THROWS_AS(diagnostics(small), InputError);
}

TEST_CASE("partition schemes cover the documented group structure") {
    const PartitionScheme full = partition_scheme("full");
    CHECK(full.name == "full");
    REQUIRE(full.groups.size() == 3);

    auto group = [&](const std::string& name) -> const FeatureGroup& {
        for (const auto& g : full.groups)
            if (g.name == name) return g;
        REQUIRE(false);
        return full.groups.front();
    };
    auto has = [](const FeatureGroup& g, const std::string& feat) {
        return std::find(g.features.begin(), g.features.end(), feature_index(feat)) !=
               g.features.end();
    };

    const FeatureGroup& fiber = group("fiber");
    CHECK(fiber.features.size() == 5);
    CHECK(has(fiber, "Vf"));
    CHECK(has(fiber, "lf_over_df"));
    CHECK(has(fiber, "a_over_d"));
    const FeatureGroup& concrete = group("concrete");
    CHECK(concrete.features.size() == 4);
    CHECK(has(concrete, "fc"));
    CHECK(has(concrete, "df_agg"));
    const FeatureGroup& steel = group("steel");
    CHECK(steel.features.size() == 4);
    CHECK(has(steel, "rho"));

    // The fiber-strength distractor belongs to no group.
    for (const auto& g : full.groups) CHECK(!has(g, "ff"));

    const PartitionScheme bgp = partition_scheme("bgp");
    REQUIRE(bgp.groups.size() == 1);
    CHECK(bgp.groups[0].features.size() == kFeatureCount);

    const PartitionScheme minimal = partition_scheme("minimal");
    CHECK(minimal.groups.size() == 3);
    for (const auto& g : minimal.groups) CHECK(g.features.size() <= 3);

    CHECK_THROWS_AS(partition_scheme("nonsense"), ConfigError);
    CHECK(default_partitions().name == "full");

    PartitionScheme broken = full;
    broken.groups[0].features.push_back(99);
    CHECK_THROWS_AS(broken.validate(), ConfigError);
    broken = full;
    broken.groups[1].features.clear();
    CHECK_THROWS_AS(broken.validate(), ConfigError);
}

TEST_CASE("split produces disjoint covering indices at the documented fractions") {
    const Dataset ds = tiny_dataset(213);
    SplitSpec spec;
    spec.seed = 99;
    const SplitIndices idx = split(ds, spec);

    CHECK(idx.val.size() == 21);   // floor(0.10 * 213)
    CHECK(idx.test.size() == 53);  // floor(0.25 * 213)
    CHECK(idx.train.size() == 139);

    std::set<std::size_t> all;
    for (const auto* part : {&idx.train, &idx.val, &idx.test})
        for (std::size_t i : *part) {
            CHECK(i < 213);
            CHECK(all.insert(i).second);  // no duplicates across splits
        }
    CHECK(all.size() == 213);

    // Deterministic per seed, different across seeds.
    const SplitIndices again = split(ds, spec);
    CHECK(again.train == idx.train);
    CHECK(again.val == idx.val);
    CHECK(again.test == idx.test);
    SplitSpec other = spec;
    other.seed = 100;
    CHECK(split(ds, other).train != idx.train);

    const Dataset tiny = tiny_dataset(9);
    CHECK_THROWS_AS(split(tiny, spec), InputError);

    SplitSpec bad;
    bad.train_fraction = 0.5;
    bad.val_fraction = 0.2;
    bad.test_fraction = 0.2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("subset keeps row/target pairing") {
    const Dataset ds = tiny_dataset(10);
    const std::vector<std::size_t> pick = {7, 2, 5};
    const Dataset sub = subset(ds, pick);
    REQUIRE(sub.n_rows() == 3);
    for (std::size_t i = 0; i < pick.size(); ++i) {
        CHECK(sub.target[i] == ds.target[pick[i]]);
        CHECK(sub.rows[i] == ds.rows[pick[i]]);
    }
}

TEST_CASE("synthetic benchmark realizes the documented mechanism terms") {
    // Noiseless generation: the target must equal the sum of the three terms.
    const Dataset ds = synth_superposition(200, 0.0, 31);
    REQUIRE(ds.n_rows() == 200);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const auto terms = synth_true_terms(ds.rows[i]);
        CHECK(ds.target[i] ==
              doctest::Approx(terms[0] + terms[1] + terms[2]).epsilon(1e-12));
        CHECK(ds.target[i] > 0.0);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            CHECK(ds.rows[i][j] >= kFeatureRanges[j].first);
            CHECK(ds.rows[i][j] <= kFeatureRanges[j].second);
        }
    }

    // Spot-check the closed forms at a hand-computed point.
    std::vector<double> row(kFeatureCount);
    row[feature_index("fc")] = 75.0;
    row[feature_index("df_agg")] = 1.0;       // q = 1, s = 1/(1 + (0.5/0.65)^2)
    row[feature_index("a_over_d")] = 2.0;     // g = 2.37 - 1.0
    row[feature_index("rho")] = 4.0;          // steel = 3.3 * 4 / 8
    row[feature_index("Vf")] = 1.0;
    row[feature_index("lf_over_df")] = 60.0;  // F = 60, fiber = 3.2 * 60 / 120
    row[feature_index("b_width")] = 500.0;
    row[feature_index("d_eff")] = 400.0;
    row[feature_index("ff")] = 3.0;
    const auto terms = synth_true_terms(row);
    const double u = (1.0 - 1.5) / 0.65;
    const double s = 1.0 / (1.0 + u * u);
    CHECK(terms[0] == doctest::Approx(2.2 + 3.45 * (s - 0.6403351356) * 1.37).epsilon(1e-12));
    CHECK(terms[1] == doctest::Approx(1.65).epsilon(1e-12));
    CHECK(terms[2] == doctest::Approx(1.6).epsilon(1e-12));

    // At the median row the target rises in fc, rho, Vf and falls in a_over_d.
    const Dataset big = synth_superposition(213, 0.1, 7);
    const std::vector<double> med = big.median_row();
    auto truth = [](std::vector<double> r) {
        const auto t = synth_true_terms(r);
        return t[0] + t[1] + t[2];
    };
    for (const char* up : {"fc", "rho", "Vf"}) {
        std::vector<double> hi = med;
        hi[feature_index(up)] *= 1.05;
        CHECK(truth(hi) > truth(med));
    }
    std::vector<double> hi = med;
    hi[feature_index("a_over_d")] *= 1.05;
    CHECK(truth(hi) < truth(med));

    // Determinism and seed sensitivity.
    const Dataset same = synth_superposition(213, 0.1, 7);
    CHECK(same.rows == big.rows);
    CHECK(same.target == big.target);
    const Dataset other = synth_superposition(213, 0.1, 8);
    CHECK(other.rows != big.rows);

    CHECK_THROWS_AS(synth_superposition(0, 0.1, 1), InputError);
    CHECK_THROWS_AS(synth_superposition(10, -0.1, 1), InputError);
    std::vector<double> short_row(3, 1.0);
    CHECK_THROWS_AS(synth_true_terms(short_row), InputError);
}

TEST_CASE("median_row takes per-feature medians") {
    Dataset ds = tiny_dataset(9);
    const std::vector<double> med = ds.median_row();
    REQUIRE(med.size() == kFeatureCount);
    for (std::size_t j = 0; j < kFeatureCount; ++j)
        CHECK(med[j] == doctest::Approx(median_of(ds.column(j))).epsilon(1e-12));
}
