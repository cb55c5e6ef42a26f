#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace digsp {

/// Deterministic random source. Wraps std::mt19937_64 but implements its own
/// uniform/gaussian draws: the standard <random> distributions are
/// implementation-defined, which would break bit-identical reproducibility
/// across compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform real in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased uniform integer in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t m = static_cast<std::uint64_t>(n);
        const std::uint64_t bound = UINT64_MAX - UINT64_MAX % m;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= bound);
        return static_cast<std::size_t>(x % m);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Box-Muller normal deviate.
    double gaussian(double mean, double sd) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sd * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double k = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * k;
        have_spare_ = true;
        return mean + sd * u * k;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}
} // namespace detail

/// Deterministically derive an independent sub-seed from a base seed and a
/// label. Used for run seeds, split seeds, per-population streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    return detail::splitmix64(base ^ detail::fnv1a64(label));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return detail::splitmix64(base ^ detail::splitmix64(salt));
}

} // namespace digsp
