#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "digsp/errors.hpp"
#include "digsp/rng.hpp"
#include "digsp/stats.hpp"
#include "doctest.h"

using namespace digsp;

namespace {

// Adaptive Simpson quadrature, used as an independent oracle for the special
// functions. Tolerance is driven well below the comparison tolerance.
double simpson(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double whole, double tol, int depth) {
    const double c = 0.5 * (a + b);
    const double left = simpson(f, a, c);
    const double right = simpson(f, c, b);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, c, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, c, b, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    return adaptive_simpson(f, a, b, simpson(f, a, b), tol, 40);
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Regularized incomplete beta by direct integration of the density (a, b >= 1
// keeps the integrand bounded at the endpoints).
double inc_beta_oracle(double a, double b, double x) {
    const double lb = log_beta(a, b);
    auto dens = [&](double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log(1.0 - t) - lb);
    };
    return integrate(dens, 0.0, x, 1e-12);
}

double f_cdf_oracle(double x, double d1, double d2) {
    const double lb = log_beta(d1 / 2.0, d2 / 2.0);
    auto dens = [&](double t) {
        if (t <= 0.0) return 0.0;
        const double num = (d1 / 2.0) * std::log(d1 / d2) + (d1 / 2.0 - 1.0) * std::log(t) -
                           ((d1 + d2) / 2.0) * std::log1p(d1 * t / d2);
        return std::exp(num - lb);
    };
    return integrate(dens, 0.0, x, 1e-12);
}

} // namespace

TEST_CASE("moment summaries reproduce hand-computed values") {
    const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(mean_of(v) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(sample_sd(v) == doctest::Approx(2.138089935299395).epsilon(1e-14));

    const std::vector<double> skewed = {1, 2, 9};
    CHECK(sample_skewness(skewed) == doctest::Approx(1.6300591617118863).epsilon(1e-13));

    // Degenerate inputs fall back to zero rather than dividing by zero.
    const std::vector<double> one = {3.0};
    const std::vector<double> two = {3.0, 3.0};
    CHECK(sample_sd(one) == 0.0);
    CHECK(sample_skewness(two) == 0.0);
    const std::vector<double> flat = {5.0, 5.0, 5.0, 5.0};
    CHECK(sample_skewness(flat) == 0.0);
}

TEST_CASE("type-7 quantiles interpolate between order statistics") {
    const std::vector<double> v = {3.0, 1.0, 4.0, 1.5, 9.0, 2.6};
    CHECK(quantile_type7(v, 0.25) == doctest::Approx(1.775).epsilon(1e-14));
    CHECK(quantile_type7(v, 0.5) == doctest::Approx(2.8).epsilon(1e-14));
    CHECK(quantile_type7(v, 0.9) == doctest::Approx(6.5).epsilon(1e-14));
    CHECK(quantile_type7(v, 0.0) == doctest::Approx(1.0));
    CHECK(quantile_type7(v, 1.0) == doctest::Approx(9.0));
    CHECK(median_of(v) == doctest::Approx(2.8).epsilon(1e-14));

    const std::vector<double> odd = {5.0, 1.0, 3.0};
    CHECK(median_of(odd) == doctest::Approx(3.0));
}

TEST_CASE("normal CDF matches reference values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
    CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-12));
    CHECK(normal_cdf(8.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(normal_cdf(-8.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("regularized incomplete beta matches reference values and clamps") {
    CHECK(reg_incomplete_beta(2.0, 3.0, 0.4) == doctest::Approx(0.5248).epsilon(1e-10));
    CHECK(reg_incomplete_beta(5.5, 1.2, 0.7) == doctest::Approx(0.1831222914486564).epsilon(1e-10));
    CHECK(reg_incomplete_beta(0.5, 0.5, 0.3) == doctest::Approx(0.36901011956554536).epsilon(1e-10));
    CHECK(reg_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(reg_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    CHECK(reg_incomplete_beta(2.0, 3.0, -0.5) == 0.0);
    CHECK(reg_incomplete_beta(2.0, 3.0, 1.5) == 1.0);
}

TEST_CASE("regularized incomplete beta agrees with quadrature oracle") {
    Rng rng(11);
    for (int i = 0; i < 60; ++i) {
        const double a = rng.uniform(1.0, 8.0);
        const double b = rng.uniform(1.0, 8.0);
        const double x = rng.uniform(0.02, 0.98);
        const double got = reg_incomplete_beta(a, b, x);
        const double want = inc_beta_oracle(a, b, x);
        CHECK(got == doctest::Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("F distribution CDF agrees with quadrature oracle and references") {
    CHECK(f_cdf(2.5, 3, 10) == doctest::Approx(0.8809604373417218).epsilon(1e-10));
    CHECK(f_cdf(1.0, 1, 1) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(f_cdf(0.0, 3, 10) == 0.0);

    Rng rng(17);
    for (int i = 0; i < 25; ++i) {
        const double d1 = 2.0 * (1 + rng.uniform_index(6));
        const double d2 = 2.0 * (1 + rng.uniform_index(6));
        const double x = rng.uniform(0.1, 5.0);
        CHECK(f_cdf(x, d1, d2) == doctest::Approx(f_cdf_oracle(x, d1, d2)).epsilon(1e-8));
    }
}

TEST_CASE("one-way ANOVA matches a brute-force oracle on random configurations") {
    Rng rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + rng.uniform_index(5);
        std::vector<std::vector<double>> groups(k);
        std::size_t n_total = 0;
        for (auto& g : groups) {
            const std::size_t sz = 2 + rng.uniform_index(7);
            n_total += sz;
            for (std::size_t i = 0; i < sz; ++i) g.push_back(rng.uniform(-5.0, 5.0));
        }

        double grand_sum = 0.0;
        for (const auto& g : groups)
            for (double x : g) grand_sum += x;
        const double grand_mean = grand_sum / static_cast<double>(n_total);
        double ssb = 0.0;
        double ssw = 0.0;
        for (const auto& g : groups) {
            double gm = 0.0;
            for (double x : g) gm += x;
            gm /= static_cast<double>(g.size());
            ssb += static_cast<double>(g.size()) * (gm - grand_mean) * (gm - grand_mean);
            for (double x : g) ssw += (x - gm) * (x - gm);
        }
        const double df1 = static_cast<double>(k - 1);
        const double df2 = static_cast<double>(n_total - k);
        const double f = (ssb / df1) / (ssw / df2);

        const AnovaResult res = one_way_anova(groups);
        CHECK(res.ss_between == doctest::Approx(ssb).epsilon(1e-8));
        CHECK(res.ss_within == doctest::Approx(ssw).epsilon(1e-8));
        CHECK(res.f_stat == doctest::Approx(f).epsilon(1e-8));
        CHECK(res.df1 == doctest::Approx(df1));
        CHECK(res.df2 == doctest::Approx(df2));
        CHECK(res.p_value == doctest::Approx(1.0 - f_cdf(f, df1, df2)).epsilon(1e-10));
        CHECK(res.p_value >= 0.0);
        CHECK(res.p_value <= 1.0);
    }
}

TEST_CASE("ANOVA degenerate configurations follow the documented conventions") {
    // Separated constant groups: no within-variance, positive between-variance.
    const AnovaResult sep = one_way_anova({{1.0, 1.0, 1.0}, {2.0, 2.0, 2.0}});
    CHECK(sep.f_stat == doctest::Approx(1e300));
    CHECK(sep.p_value == 0.0);

    // Entirely identical data in every group.
    const AnovaResult flat = one_way_anova({{3.0, 3.0}, {3.0, 3.0, 3.0}});
    CHECK(flat.f_stat == 0.0);
    CHECK(flat.p_value == 1.0);
}

TEST_CASE("ANOVA input validation") {
    CHECK_THROWS_AS(one_way_anova({{1.0, 2.0}}), InputError);
    CHECK_THROWS_AS(one_way_anova({{1.0, 2.0}, {}}), InputError);
    // Two groups of one observation each: n == k, the F test is ill-posed.
    CHECK_THROWS_AS(one_way_anova({{1.0}, {2.0}}), InputError);
}
