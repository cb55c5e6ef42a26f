#include "digsp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "digsp/errors.hpp"

namespace digsp {

double mean_of(std::span<const double> v) {
    if (v.empty()) throw InputError("mean_of: empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) {
        const double d = x - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

double sample_skewness(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 3) return 0.0;
    const double m = mean_of(v);
    double m2 = 0.0;
    double m3 = 0.0;
    for (double x : v) {
        const double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    if (m2 <= 0.0) return 0.0;
    const double g1 = m3 / std::pow(m2, 1.5);
    const double nn = static_cast<double>(n);
    return g1 * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
}

double quantile_type7(std::span<const double> v, double q) {
    if (v.empty()) throw InputError("quantile_type7: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InputError("quantile_type7: q outside [0, 1]");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const double h = (static_cast<double>(s.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= s.size()) return s.back();
    const double frac = h - static_cast<double>(lo);
    return s[lo] + frac * (s[lo + 1] - s[lo]);
}

double median_of(std::span<const double> v) { return quantile_type7(v, 0.5); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Continued-fraction core of the incomplete beta function, evaluated with the
// modified Lentz algorithm.
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double reg_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw InputError("reg_incomplete_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // Use the expansion on whichever side converges fast, and the symmetry
    // I_x(a, b) = 1 - I_{1-x}(b, a) on the other.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double f_cdf(double x, double df1, double df2) {
    if (!(df1 > 0.0) || !(df2 > 0.0)) throw InputError("f_cdf: degrees of freedom must be positive");
    if (x <= 0.0) return 0.0;
    const double u = df1 * x / (df1 * x + df2);
    return reg_incomplete_beta(0.5 * df1, 0.5 * df2, u);
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    const std::size_t k = groups.size();
    if (k < 2) throw InputError("one_way_anova: needs at least two groups");
    std::size_t n_total = 0;
    for (const auto& g : groups) {
        if (g.empty()) throw InputError("one_way_anova: empty group");
        n_total += g.size();
    }
    if (n_total < k + 1) throw InputError("one_way_anova: needs more observations than groups");

    double grand = 0.0;
    for (const auto& g : groups)
        for (double x : g) grand += x;
    grand /= static_cast<double>(n_total);

    AnovaResult r;
    r.df1 = static_cast<int>(k) - 1;
    r.df2 = static_cast<int>(n_total - k);
    for (const auto& g : groups) {
        const double gm = mean_of(g);
        const double dm = gm - grand;
        r.ss_between += static_cast<double>(g.size()) * dm * dm;
        for (double x : g) {
            const double d = x - gm;
            r.ss_within += d * d;
        }
    }

    if (r.ss_within == 0.0) {
        // No residual variance: the statistic degenerates. Distinguish
        // "groups differ exactly" from "everything identical".
        if (r.ss_between > 0.0) {
            r.f_stat = 1e300;
            r.p_value = 0.0;
        } else {
            r.f_stat = 0.0;
            r.p_value = 1.0;
        }
        return r;
    }

    r.f_stat = (r.ss_between / r.df1) / (r.ss_within / r.df2);
    r.p_value = 1.0 - f_cdf(r.f_stat, r.df1, r.df2);
    return r;
}

}  // namespace digsp
