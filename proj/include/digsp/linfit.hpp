#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "digsp/rng.hpp"

namespace digsp {

/// Column-major design matrix of gene outputs: columns[j][i] is the output of
/// gene j on sample i. column_means/column_sds hold the standardization
/// statistics of the most recent compute_stats() call.
struct DesignMatrix {
    std::vector<std::vector<double>> columns;
    std::size_t n_rows = 0;
    // Standardization statistics; derived cache, filled by compute_stats().
    mutable std::vector<double> column_means;
    mutable std::vector<double> column_sds;

    static DesignMatrix from_columns(std::vector<std::vector<double>> cols);

    std::size_t n_cols() const { return columns.size(); }

    /// Fills column_means / column_sds (population sd).
    void compute_stats() const;
};

/// Result of an elastic-net / ridge / OLS fit. Coefficients are on the
/// original column scale; the intercept is unpenalized.
struct LinearFit {
    std::vector<double> beta;
    double intercept = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double train_rmse = 0.0;
};

inline constexpr double kDefaultLambda1 = 1e-3;
inline constexpr double kDefaultLambda2 = 1e-3;
inline constexpr double kCoordDescentTol = 1e-8;
inline constexpr int kCoordDescentMaxIters = 10000;

/// Minimizes (1/n) * sum((y - yhat)^2) + lambda1*||b||_1 + lambda2*||b||_2^2
/// by cyclic coordinate descent on standardized columns. Zero-variance
/// columns get coefficient 0. Throws InputError on non-finite input,
/// negative lambdas, or n_rows < 2.
LinearFit fit_elastic_net(const DesignMatrix& X, std::span<const double> y,
                          double lambda1, double lambda2,
                          double tol = kCoordDescentTol,
                          int max_iters = kCoordDescentMaxIters);

/// yhat_i = sum_j beta_j * X[j][i] + intercept. Throws InputError on a
/// column-count mismatch.
std::vector<double> predict(const LinearFit& fit, const DesignMatrix& X);

/// sqrt(mean((yhat - y)^2)). Throws InputError on length mismatch or empty input.
double rmse(std::span<const double> yhat, std::span<const double> y);

/// Value of the elastic-net objective for a fit on (X, y); used by tests for
/// the sweep-monotonicity property.
double elastic_net_objective(const DesignMatrix& X, std::span<const double> y,
                             const LinearFit& fit);

/// Seeded shuffle split of n samples into k folds of near-equal size.
/// Returns fold_of[i] in [0, k).
std::vector<int> make_folds(std::size_t n, int k, Rng& rng);

/// Mean held-out RMSE over the folds in `fold_of` (values in [0,k)).
double kfold_cv_rmse(const DesignMatrix& X, std::span<const double> y,
                     std::span<const int> fold_of, int k,
                     double lambda1, double lambda2);

/// Convenience overload drawing the fold assignment from `rng`.
/// Throws InputError when n_rows < k or k < 2.
double kfold_cv_rmse(const DesignMatrix& X, std::span<const double> y, int k,
                     double lambda1, double lambda2, Rng& rng);

} // namespace digsp
