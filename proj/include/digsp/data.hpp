#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace digsp {

// Canonical feature schema for the SFRC shear-strength database. Order is
// fixed; every row vector in a Dataset follows it.
//   b_width     beam width (mm)
//   d_eff       effective depth (mm)
//   fc          concrete compressive strength (MPa)
//   a_over_d    shear span to depth ratio (-)
//   rho         longitudinal reinforcement ratio (-)
//   df_agg      maximum aggregate size (mm)
//   Vf          fiber volume fraction (%)
//   lf_over_df  fiber aspect ratio (-)
//   ff          fiber tensile strength factor (MPa)
// Target: Vu, ultimate shear strength (kN).
inline constexpr std::size_t kFeatureCount = 9;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "b_width", "d_eff", "fc", "a_over_d", "rho", "df_agg", "Vf", "lf_over_df", "ff"};
inline constexpr const char* kTargetName = "Vu";

/// Observed envelope of each physical quantity in the experimental database;
/// the synthetic generator samples uniformly inside these bounds.
inline constexpr std::array<std::pair<double, double>, kFeatureCount> kFeatureRanges = {{
    {120.0, 3637.87},  // b_width
    {80.0, 1548.03},   // d_eff
    {20.6, 111.5},     // fc
    {0.47, 5.0},       // a_over_d
    {1.0, 10.5},       // rho
    {0.5, 1.0},        // df_agg
    {0.22, 2.0},       // Vf
    {25.0, 133.33},    // lf_over_df
    {2.17, 7.11},      // ff
}};

/// Index of a canonical feature name; throws InputError on unknown names.
std::size_t feature_index(const std::string& name);

struct Dataset {
    std::vector<std::vector<double>> rows;  // each row: kFeatureCount values
    std::vector<double> target;             // Vu per row

    std::size_t n_rows() const { return rows.size(); }

    /// One feature as a contiguous column.
    std::vector<double> column(std::size_t feature) const;

    /// Per-feature medians of the full dataset (the reference input point for
    /// local sensitivity analyses).
    std::vector<double> median_row() const;
};

// Ingestion -------------------------------------------------------------------

/// Loads a comma-separated file with a header row. Headers may use canonical
/// names or accepted aliases (case-insensitive); the column set must match
/// the schema exactly (all nine features plus Vu, nothing else). Every value
/// must be finite and strictly positive. Violations raise IngestionError
/// naming the offending row/column.
Dataset load_csv(const std::string& path);

/// Writes a dataset in the same schema load_csv accepts.
void save_csv(const Dataset& ds, const std::string& path);

// Diagnostics -----------------------------------------------------------------

struct ColumnDiagnostics {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    double range = 0.0;
    double mean = 0.0;
    double sd = 0.0;        // sample SD, n-1 denominator
    double median = 0.0;
    double skewness = 0.0;  // adjusted Fisher-Pearson
    double pct_outliers = 0.0;  // Tukey 1.5*IQR fence, percent of rows
};

/// Summary statistics for every feature column plus the target. Quartiles use
/// linear interpolation between order statistics, so outlier percentages are
/// tied to that convention. Requires at least 4 rows.
std::vector<ColumnDiagnostics> diagnostics(const Dataset& ds);

// Domain partitions -------------------------------------------------------------

struct FeatureGroup {
    std::string name;
    std::vector<std::size_t> features;  // indices into kFeatureNames
};

struct PartitionScheme {
    std::string name;
    std::vector<FeatureGroup> groups;

    void validate() const;  // non-empty groups, valid indices
};

/// Named schemes:
///   "full"    — fiber/concrete/steel mechanism groups, each carrying its
///               geometry context (the default).
///   "minimal" — the same three mechanisms reduced to one driver plus a/d.
///   "bgp"     — a single group over all nine features (monolithic baseline).
PartitionScheme partition_scheme(const std::string& name);

PartitionScheme default_partitions();  // = partition_scheme("full")

// Train/validation/test split -----------------------------------------------

struct SplitSpec {
    double train_fraction = 0.65;
    double val_fraction = 0.10;
    double test_fraction = 0.25;
    std::uint64_t seed = 0;

    void validate() const;  // fractions sum to 1 within 1e-12
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Seeded shuffle, then floor allocation: val and test take floor(fraction*n)
/// rows each and the remainder goes to train. Disjoint and covering.
/// Requires n >= 10.
SplitIndices split(const Dataset& ds, const SplitSpec& spec);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

// Synthetic superposition benchmark -------------------------------------------

/// Generates a dataset whose ground truth is an exact superposition of three
/// mechanism terms:
///   concrete: 2.2 + 3.45 * (s(q) - 0.6403351356) * (2.37 - 0.50 * a_over_d)
///             with q = fc / (75 * df_agg), s(q) = 1 / (1 + ((q - 1.5)/0.65)^2)
///   steel:    3.3 * rho / (rho + 4)
///   fiber:    3.2 * F / (F + 60),  fiber factor F = Vf * lf_over_df
/// Steel and fiber depend only on variables exclusive to their groups, and
/// the concrete hump s is centered (E[s] equals the subtracted constant), so
/// E[concrete | a_over_d] is flat: no population can absorb another
/// mechanism's variance through shared variables and the cross-population
/// fusion is exactly additive. The concrete hump-times-span interaction is
/// unreachable for any sum of single-variable shapes (about 0.42 sd of
/// target), so stacking one-variable fragments cannot substitute for finding
/// the interaction itself. At the median row y is increasing in fc, rho and
/// Vf and decreasing in a_over_d. y = sum of terms + N(0, noise_sd),
/// resampled while y <= 0 so the schema's positivity invariant holds.
/// Features are uniform within kFeatureRanges.
Dataset synth_superposition(std::size_t n, double noise_sd, std::uint64_t seed);

/// The three noiseless mechanism terms for one row (concrete, steel, fiber).
std::array<double, 3> synth_true_terms(std::span<const double> row);

}  // namespace digsp
