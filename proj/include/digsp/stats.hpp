#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace digsp {

// Basic moments -------------------------------------------------------------

double mean_of(std::span<const double> v);

/// Sample standard deviation (n-1 denominator). Returns 0.0 when n < 2.
double sample_sd(std::span<const double> v);

/// Adjusted Fisher-Pearson skewness: g1 * sqrt(n(n-1)) / (n-2).
/// Returns 0.0 when n < 3 or the sample is constant.
double sample_skewness(std::span<const double> v);

// Quantiles -----------------------------------------------------------------

/// Linear-interpolation quantile (R type 7): h = (n-1)q, interpolate between
/// the floor(h)-th and next order statistic. q must lie in [0, 1].
double quantile_type7(std::span<const double> v, double q);

double median_of(std::span<const double> v);

// Distribution functions -----------------------------------------------------

/// Standard normal CDF.
double normal_cdf(double z);

/// Regularized incomplete beta function I_x(a, b), evaluated with the
/// Lentz continued-fraction expansion. a, b > 0; x clamped to [0, 1].
double reg_incomplete_beta(double a, double b, double x);

/// CDF of the F distribution with (df1, df2) degrees of freedom.
double f_cdf(double x, double df1, double df2);

// One-way ANOVA ---------------------------------------------------------------

struct AnovaResult {
    double ss_between = 0.0;
    double ss_within = 0.0;
    double f_stat = 0.0;
    int df1 = 0;
    int df2 = 0;
    double p_value = 1.0;
};

/// One-way fixed-effects ANOVA over k groups. Requires k >= 2, every group
/// non-empty, and at least k+1 observations in total (df2 >= 1).
/// Degenerate cases: zero within-group variance with non-zero between-group
/// variance reports f = 1e300, p = 0; all-identical data reports f = 0, p = 1.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

}  // namespace digsp
