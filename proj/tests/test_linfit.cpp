#include <cmath>
#include <cstddef>
#include <vector>

#include "digsp/errors.hpp"
#include "digsp/linfit.hpp"
#include "digsp/rng.hpp"
#include "doctest.h"

using namespace digsp;

namespace {

// Gaussian elimination with partial pivoting; the instances below are small
// and well-conditioned, so this is a sufficient closed-form oracle.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double m = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= m * a[col][c];
            b[r] -= m * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

double mean_of_oracle(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Closed-form ridge on the standardized problem the coordinate descent
// solves: minimize (1/n)||y_c - Z b||^2 + lambda2 ||b||^2 with Z the
// population-standardized columns, then map back to raw scale.
LinearFit ridge_oracle(const DesignMatrix& X, const std::vector<double>& y, double lambda2) {
    const std::size_t n = X.n_rows;
    const std::size_t p = X.n_cols();
    X.compute_stats();
    const double y_mean = mean_of_oracle(y);
    std::vector<std::vector<double>> z(p, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < n; ++i)
            z[j][i] = (X.columns[j][i] - X.column_means[j]) / X.column_sds[j];

    std::vector<std::vector<double>> gram(p, std::vector<double>(p, 0.0));
    std::vector<double> rhs(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = 0; k < p; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += z[j][i] * z[k][i];
            gram[j][k] = dot / static_cast<double>(n);
        }
        gram[j][j] += lambda2;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += z[j][i] * (y[i] - y_mean);
        rhs[j] = dot / static_cast<double>(n);
    }
    const std::vector<double> b_std = solve(gram, rhs);

    LinearFit fit;
    fit.lambda1 = 0.0;
    fit.lambda2 = lambda2;
    fit.beta.assign(p, 0.0);
    fit.intercept = y_mean;
    for (std::size_t j = 0; j < p; ++j) {
        fit.beta[j] = b_std[j] / X.column_sds[j];
        fit.intercept -= fit.beta[j] * X.column_means[j];
    }
    return fit;
}

DesignMatrix random_design(Rng& rng, std::size_t n, std::size_t p) {
    std::vector<std::vector<double>> cols(p);
    for (auto& c : cols) {
        c.resize(n);
        for (auto& x : c) x = rng.uniform(-3.0, 3.0);
    }
    return DesignMatrix::from_columns(std::move(cols));
}

} // namespace

TEST_CASE("elastic net with lambda1=0 matches closed-form ridge and OLS") {
    Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t p = 1 + rng.uniform_index(10);
        const std::size_t n = std::max<std::size_t>(10, p + 5) + rng.uniform_index(30);
        const DesignMatrix X = random_design(rng, n, p);
        std::vector<double> y(n);
        for (auto& v : y) v = rng.uniform(-10.0, 10.0);
        const double lambda2 = (trial % 2 == 0) ? 0.0 : rng.uniform(0.001, 1.0);

        const LinearFit got = fit_elastic_net(X, y, 0.0, lambda2, 1e-12, 200000);
        const LinearFit want = ridge_oracle(X, y, lambda2);
        for (std::size_t j = 0; j < p; ++j)
            CHECK(got.beta[j] == doctest::Approx(want.beta[j]).epsilon(1e-6).scale(1.0));
        CHECK(got.intercept == doctest::Approx(want.intercept).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("elastic net solution is a local optimum of its own objective") {
    Rng rng(7);
    const DesignMatrix X = random_design(rng, 40, 4);
    std::vector<double> y(40);
    for (auto& v : y) v = rng.uniform(-5.0, 5.0);
    const LinearFit fit = fit_elastic_net(X, y, 0.05, 0.05, 1e-12, 200000);
    const double base = elastic_net_objective(X, y, fit);

    // Perturbing any coefficient or the intercept must not improve it.
    for (std::size_t j = 0; j <= X.n_cols(); ++j) {
        for (double step : {1e-4, -1e-4, 1e-3, -1e-3}) {
            LinearFit moved = fit;
            if (j < X.n_cols())
                moved.beta[j] += step;
            else
                moved.intercept += step;
            CHECK(elastic_net_objective(X, y, moved) >= base - 1e-12);
        }
    }
}

TEST_CASE("stronger L1 penalties only shrink the coefficient mass") {
    Rng rng(31);
    const DesignMatrix X = random_design(rng, 50, 5);
    std::vector<double> y(50);
    for (std::size_t i = 0; i < 50; ++i)
        y[i] = 2.0 * X.columns[0][i] - 1.0 * X.columns[3][i] + rng.uniform(-0.5, 0.5);

    double previous = 1e300;
    for (double lambda1 : {0.0, 0.01, 0.1, 1.0, 10.0}) {
        const LinearFit fit = fit_elastic_net(X, y, lambda1, 0.0, 1e-12, 200000);
        X.compute_stats();
        double mass = 0.0;
        for (std::size_t j = 0; j < X.n_cols(); ++j)
            mass += std::abs(fit.beta[j] * X.column_sds[j]);
        CHECK(mass <= previous + 1e-9);
        previous = mass;
    }

    // A penalty beyond every column correlation empties the model.
    const LinearFit crushed = fit_elastic_net(X, y, 1e6, 0.0, 1e-12, 200000);
    for (double b : crushed.beta) CHECK(b == 0.0);
    CHECK(crushed.intercept == doctest::Approx(mean_of_oracle(y)).epsilon(1e-12));
}

TEST_CASE("degenerate designs collapse to the intercept-only model") {
    std::vector<std::vector<double>> cols = {{4.0, 4.0, 4.0, 4.0}};
    const DesignMatrix X = DesignMatrix::from_columns(std::move(cols));
    const std::vector<double> y = {1.0, 2.0, 3.0, 6.0};
    const LinearFit fit = fit_elastic_net(X, y, 1e-3, 1e-3, 1e-10, 10000);
    CHECK(fit.beta[0] == 0.0);
    CHECK(fit.intercept == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.train_rmse == doctest::Approx(std::sqrt((4.0 + 1.0 + 0.0 + 9.0) / 4.0)));
}

TEST_CASE("fit input validation") {
    std::vector<std::vector<double>> cols = {{1.0, 2.0}, {3.0, 4.0, 5.0}};
    CHECK_THROWS_AS(DesignMatrix::from_columns(std::move(cols)), InputError);

    const DesignMatrix X = DesignMatrix::from_columns({{1.0, 2.0, 3.0}});
    const std::vector<double> y3 = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(fit_elastic_net(X, {y3.data(), 2}, 0.0, 0.0, 1e-8, 100), InputError);
    CHECK_THROWS_AS(fit_elastic_net(X, y3, -1.0, 0.0, 1e-8, 100), InputError);
    CHECK_THROWS_AS(fit_elastic_net(X, y3, 0.0, -1.0, 1e-8, 100), InputError);

    const DesignMatrix one = DesignMatrix::from_columns({{1.0}});
    const std::vector<double> y1 = {1.0};
    CHECK_THROWS_AS(fit_elastic_net(one, y1, 0.0, 0.0, 1e-8, 100), InputError);

    const std::vector<double> bad = {1.0, std::nan(""), 3.0};
    CHECK_THROWS_AS(fit_elastic_net(X, bad, 0.0, 0.0, 1e-8, 100), InputError);
}

TEST_CASE("rmse reproduces a hand value and validates input") {
    const std::vector<double> yhat = {3.0, 4.0};
    const std::vector<double> y = {0.0, 0.0};
    CHECK(rmse(yhat, y) == doctest::Approx(3.5355339059327378).epsilon(1e-15));
    CHECK_THROWS_AS(rmse(yhat, {y.data(), 1}), InputError);
    const std::vector<double> empty;
    CHECK_THROWS_AS(rmse(empty, empty), InputError);
}

TEST_CASE("fold assignment is balanced, in range, and deterministic") {
    Rng rng_a(55);
    Rng rng_b(55);
    const std::vector<int> f1 = make_folds(103, 5, rng_a);
    const std::vector<int> f2 = make_folds(103, 5, rng_b);
    CHECK(f1 == f2);

    std::vector<int> counts(5, 0);
    for (int f : f1) {
        REQUIRE(f >= 0);
        REQUIRE(f < 5);
        ++counts[f];
    }
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*hi - *lo <= 1);

    Rng rng_c(1);
    CHECK_THROWS_AS(make_folds(4, 5, rng_c), InputError);
    CHECK_THROWS_AS(make_folds(10, 1, rng_c), InputError);
}

TEST_CASE("k-fold CV equals a manual fold loop") {
    Rng rng(77);
    const DesignMatrix X = random_design(rng, 23, 3);
    std::vector<double> y(23);
    for (auto& v : y) v = rng.uniform(-4.0, 4.0);
    Rng fold_rng(13);
    const std::vector<int> fold_of = make_folds(23, 4, fold_rng);

    double manual = 0.0;
    for (int f = 0; f < 4; ++f) {
        std::vector<std::vector<double>> tr(3);
        std::vector<std::vector<double>> te(3);
        std::vector<double> try_;
        std::vector<double> tey;
        for (std::size_t i = 0; i < 23; ++i) {
            const bool held = fold_of[i] == f;
            for (std::size_t j = 0; j < 3; ++j) (held ? te[j] : tr[j]).push_back(X.columns[j][i]);
            (held ? tey : try_).push_back(y[i]);
        }
        const DesignMatrix Xtr = DesignMatrix::from_columns(std::move(tr));
        const DesignMatrix Xte = DesignMatrix::from_columns(std::move(te));
        const LinearFit fit = fit_elastic_net(Xtr, try_, kDefaultLambda1, kDefaultLambda2);
        manual += rmse(predict(fit, Xte), tey);
    }
    manual /= 4.0;

    CHECK(kfold_cv_rmse(X, y, fold_of, 4, kDefaultLambda1, kDefaultLambda2) ==
          doctest::Approx(manual).epsilon(1e-14));

    // The rng overload just derives the assignment internally.
    Rng again(13);
    CHECK(kfold_cv_rmse(X, y, 4, kDefaultLambda1, kDefaultLambda2, again) ==
          doctest::Approx(manual).epsilon(1e-14));
}
