#include "digsp/linfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "digsp/errors.hpp"

namespace digsp {

namespace {

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw InputError(std::string("non-finite value in ") + what);
}

} // namespace

DesignMatrix DesignMatrix::from_columns(std::vector<std::vector<double>> cols) {
    DesignMatrix X;
    X.columns = std::move(cols);
    X.n_rows = X.columns.empty() ? 0 : X.columns.front().size();
    for (const auto& c : X.columns)
        if (c.size() != X.n_rows) throw InputError("design matrix columns have unequal lengths");
    return X;
}

void DesignMatrix::compute_stats() const {
    column_means.assign(columns.size(), 0.0);
    column_sds.assign(columns.size(), 0.0);
    const double n = static_cast<double>(n_rows);
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const double m = mean_of(columns[j]);
        double ss = 0.0;
        for (double x : columns[j]) ss += (x - m) * (x - m);
        column_means[j] = m;
        column_sds[j] = std::sqrt(ss / n);
    }
}

LinearFit fit_elastic_net(const DesignMatrix& X, std::span<const double> y,
                          double lambda1, double lambda2, double tol, int max_iters) {
    const std::size_t n = X.n_rows;
    const std::size_t p = X.n_cols();
    if (n < 2) throw InputError("fit_elastic_net requires n_rows >= 2");
    if (y.size() != n) throw InputError("y length does not match design matrix rows");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw InputError("lambdas must be >= 0");
    check_finite(y, "y");
    for (const auto& c : X.columns) check_finite(c, "design matrix");

    X.compute_stats();

    const double y_mean = mean_of(y);
    std::vector<double> yc(n);
    for (std::size_t i = 0; i < n; ++i) yc[i] = y[i] - y_mean;

    // Standardized copies; zero-variance columns are skipped entirely.
    std::vector<std::vector<double>> z(p);
    std::vector<bool> active(p, false);
    for (std::size_t j = 0; j < p; ++j) {
        if (X.column_sds[j] > 1e-12) {
            active[j] = true;
            z[j].resize(n);
            for (std::size_t i = 0; i < n; ++i)
                z[j][i] = (X.columns[j][i] - X.column_means[j]) / X.column_sds[j];
        }
    }

    // Cyclic coordinate descent on the standardized problem. Each column has
    // unit second moment, so the update is a soft threshold over 1 + lambda2.
    std::vector<double> b(p, 0.0);
    std::vector<double> residual = yc;
    const double nd = static_cast<double>(n);
    for (int iter = 0; iter < max_iters; ++iter) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (!active[j]) continue;
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += z[j][i] * residual[i];
            const double rho = dot / nd + b[j];
            const double thresholded =
                std::copysign(std::max(std::abs(rho) - lambda1 / 2.0, 0.0), rho);
            const double b_new = thresholded / (1.0 + lambda2);
            const double delta = b_new - b[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * z[j][i];
                b[j] = b_new;
            }
            max_delta = std::max(max_delta, std::abs(delta));
        }
        if (max_delta < tol) break;
    }

    LinearFit fit;
    fit.lambda1 = lambda1;
    fit.lambda2 = lambda2;
    fit.beta.assign(p, 0.0);
    double intercept = y_mean;
    for (std::size_t j = 0; j < p; ++j) {
        if (!active[j]) continue;
        fit.beta[j] = b[j] / X.column_sds[j];
        intercept -= fit.beta[j] * X.column_means[j];
    }
    fit.intercept = intercept;
    fit.train_rmse = rmse(predict(fit, X), y);
    return fit;
}

std::vector<double> predict(const LinearFit& fit, const DesignMatrix& X) {
    if (fit.beta.size() != X.n_cols())
        throw InputError("predict: coefficient count does not match column count");
    std::vector<double> yhat(X.n_rows, fit.intercept);
    for (std::size_t j = 0; j < X.n_cols(); ++j) {
        const double bj = fit.beta[j];
        if (bj == 0.0) continue;
        const auto& col = X.columns[j];
        for (std::size_t i = 0; i < X.n_rows; ++i) yhat[i] += bj * col[i];
    }
    return yhat;
}

double rmse(std::span<const double> yhat, std::span<const double> y) {
    if (yhat.size() != y.size()) throw InputError("rmse: length mismatch");
    if (y.empty()) throw InputError("rmse: empty input");
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = yhat[i] - y[i];
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(y.size()));
}

double elastic_net_objective(const DesignMatrix& X, std::span<const double> y,
                             const LinearFit& fit) {
    const std::vector<double> yhat = predict(fit, X);
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - yhat[i];
        sse += r * r;
    }
    // Penalties apply to the standardized-scale coefficients the descent
    // actually operates on: b_j = beta_j * sd_j.
    if (X.column_sds.size() != X.n_cols()) X.compute_stats();
    double l1 = 0.0;
    double l2 = 0.0;
    for (std::size_t j = 0; j < X.n_cols(); ++j) {
        const double bj = fit.beta[j] * X.column_sds[j];
        l1 += std::abs(bj);
        l2 += bj * bj;
    }
    return sse / static_cast<double>(y.size()) + fit.lambda1 * l1 + fit.lambda2 * l2;
}

std::vector<int> make_folds(std::size_t n, int k, Rng& rng) {
    if (k < 2) throw InputError("k-fold CV requires k >= 2");
    if (n < static_cast<std::size_t>(k)) throw InputError("k-fold CV requires n_rows >= k");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Fisher-Yates with our own bounded draw (std::shuffle is
    // implementation-defined).
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng.uniform_index(i + 1);
        std::swap(order[i], order[j]);
    }
    std::vector<int> fold_of(n, 0);
    for (std::size_t r = 0; r < n; ++r)
        fold_of[order[r]] = static_cast<int>(r % static_cast<std::size_t>(k));
    return fold_of;
}

double kfold_cv_rmse(const DesignMatrix& X, std::span<const double> y,
                     std::span<const int> fold_of, int k,
                     double lambda1, double lambda2) {
    if (fold_of.size() != X.n_rows) throw InputError("fold assignment length mismatch");
    double total = 0.0;
    for (int f = 0; f < k; ++f) {
        std::vector<std::vector<double>> train_cols(X.n_cols());
        std::vector<double> train_y;
        std::vector<std::vector<double>> test_cols(X.n_cols());
        std::vector<double> test_y;
        for (std::size_t i = 0; i < X.n_rows; ++i) {
            const bool held_out = fold_of[i] == f;
            for (std::size_t j = 0; j < X.n_cols(); ++j)
                (held_out ? test_cols[j] : train_cols[j]).push_back(X.columns[j][i]);
            (held_out ? test_y : train_y).push_back(y[i]);
        }
        const DesignMatrix train_X = DesignMatrix::from_columns(std::move(train_cols));
        const DesignMatrix test_X = DesignMatrix::from_columns(std::move(test_cols));
        const LinearFit fit = fit_elastic_net(train_X, train_y, lambda1, lambda2);
        total += rmse(predict(fit, test_X), test_y);
    }
    return total / static_cast<double>(k);
}

double kfold_cv_rmse(const DesignMatrix& X, std::span<const double> y, int k,
                     double lambda1, double lambda2, Rng& rng) {
    const std::vector<int> fold_of = make_folds(X.n_rows, k, rng);
    return kfold_cv_rmse(X, y, fold_of, k, lambda1, lambda2);
}

} // namespace digsp
