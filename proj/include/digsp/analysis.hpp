#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "digsp/ensemble.hpp"
#include "digsp/exprtree.hpp"

namespace digsp {

// Distribution summaries --------------------------------------------------------

struct SummaryStats {
    double median = 0.0;
    double iqr = 0.0;  // Q3 - Q1, linear-interpolation quartiles
    double mean = 0.0;
    double sd = 0.0;  // sample SD
};

SummaryStats summarize(std::span<const double> values);

// Rank helpers -------------------------------------------------------------------

/// 1-based ranks with ties assigned the average of their covered positions.
std::vector<double> average_ranks(std::span<const double> values);

// Wilcoxon rank-sum (unpaired) ---------------------------------------------------

struct RankSumResult {
    double statistic = 0.0;  // rank sum of the first sample
    double p_two_sided = 1.0;
    bool exact = false;
};

/// Two-sided test on independent samples. Exact enumeration of the rank-sum
/// distribution (tie-aware, conditional on observed ranks) when both samples
/// have fewer than 15 values; otherwise normal approximation with tie and
/// continuity corrections.
RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

/// The two p-value routes, exposed for cross-checking: exact subset
/// enumeration (cost grows combinatorially) and the normal approximation.
double rank_sum_p_exact(std::span<const double> a, std::span<const double> b);
double rank_sum_p_normal(std::span<const double> a, std::span<const double> b);

// Wilcoxon signed-rank (paired) --------------------------------------------------

enum class Alternative { Greater, TwoSided };

struct PairedTestResult {
    std::vector<double> deltas;
    double w_statistic = 0.0;  // sum of positive-delta ranks
    double p_value = 1.0;
    double rank_biserial = 0.0;  // 2W / (n(n+1)/2) - 1
    double win_fraction = 0.0;   // share of strictly positive deltas (zeros count against)
    std::size_t n_nonzero = 0;
    bool exact = false;
};

/// Paired test on per-run deltas. Zero deltas are dropped before ranking;
/// throws InputError when none survive. Exact sign-enumeration for fewer
/// than 15 non-zero deltas, else normal approximation with tie and
/// continuity corrections.
PairedTestResult wilcoxon_signed_rank(std::span<const double> deltas, Alternative alternative);

double signed_rank_p_exact(std::span<const double> nonzero_deltas, Alternative alternative);
double signed_rank_p_normal(std::span<const double> nonzero_deltas, Alternative alternative);

// Bootstrap ----------------------------------------------------------------------

/// Seeded percentile bootstrap CI for the mean. Requires at least 2 values,
/// n_boot >= 1 and level in (0, 1).
std::pair<double, double> bootstrap_ci_mean(std::span<const double> values, int n_boot,
                                            double level, std::uint64_t seed);

inline constexpr int kDefaultBootstrapResamples = 10000;

// One-point elasticity -----------------------------------------------------------

/// Dimensionless local sensitivity: S = [V(x with x_v*(1+eps)) - V(x)] /
/// (eps * V(x)), a forward finite difference on the fitted model, no
/// retraining. Throws InputError when the base prediction is exactly zero or
/// eps <= 0.
double elasticity(const EnsembleModel& model, std::span<const double> x_median,
                  std::size_t variable, double epsilon,
                  const AbstractionRegistry* registry);

inline constexpr double kDefaultElasticityEpsilon = 0.01;

/// Per-variable elasticity values across runs plus their summary.
struct ElasticityResult {
    std::string variable;
    double epsilon = kDefaultElasticityEpsilon;
    std::vector<double> values;  // one per run
    SummaryStats stats;
};

// Mechanism contributions --------------------------------------------------------

struct MechanismContribution {
    std::string mechanism;
    double contribution = 0.0;  // kN at the median input point
    double share_pct = 0.0;     // of the sum of absolute contributions
};

struct ContributionBreakdown {
    std::vector<MechanismContribution> mechanisms;
    double intercept = 0.0;  // reported separately, not part of the shares
};

/// Attribution at the dataset-median point. Members from mechanism-named
/// populations (fiber/concrete/steel) contribute fusion-weight times their
/// prediction. Members of a monolithic population are attributed per gene by
/// variable ownership: a gene touching exactly one mechanism's variables
/// (geometry is shared and neutral) goes to that mechanism, anything else to
/// a "mixed" bucket. Shares are percentages of summed absolute contributions.
ContributionBreakdown mechanism_contributions(const EnsembleModel& model,
                                              std::span<const double> x_median,
                                              const AbstractionRegistry* registry);

// Parsimony ----------------------------------------------------------------------

/// The ensemble as one closed-form expression tree: sum of fusion-weight
/// times each member's fused expression plus the fusion intercept, with all
/// abstracted terminals recursively expanded to raw features.
ExprTree materialize_closed_form(const EnsembleModel& model,
                                 const AbstractionRegistry* registry);

/// Number of additive terms the expression expands to algebraically:
/// Add/Sub sum their sides, Mul multiplies them, Div counts its numerator,
/// leaves count 1. Saturates at 10^15.
unsigned long long additive_term_count(const ExprTree& tree);

struct ParsimonyProfile {
    unsigned long long n_terms = 0;
    int tree_size_nodes = 0;
    int operator_count = 0;
};

ParsimonyProfile parsimony(const EnsembleModel& model, const AbstractionRegistry* registry);

}  // namespace digsp
