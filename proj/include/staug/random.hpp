#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "staug/errors.hpp"

namespace staug {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seeded xoshiro256** generator. The state is expanded from the seed with
/// splitmix64, so the draw sequence is a fixed function of the seed.
///
/// Child sources are derived from the seed alone (not the current state),
/// so `child(k)` is the same no matter how many draws the parent has made.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed = 0) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& s : s_) s = splitmix64(sm);
    }

    std::uint64_t seed() const noexcept { return seed_; }

    RandomSource child(std::uint64_t key) const {
        std::uint64_t sm = seed_ ^ 0xD1B54A32D192ED03ULL;
        const std::uint64_t a = splitmix64(sm);
        std::uint64_t k = key + a;
        return RandomSource(splitmix64(k) ^ a);
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [a, b).
    double uniform(double a, double b) noexcept {
        const double v = a + (b - a) * uniform01();
        return v < b ? v : std::nextafter(b, a);
    }

    /// Unbiased integer in [0, n) by rejection.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw ConfigError("uniform_index: empty range");
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    /// Standard normal by the Marsaglia polar method.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Gamma(shape, 1). Marsaglia-Tsang for shape >= 1; shape < 1 is
    /// boosted to shape + 1 and scaled by U^(1/shape).
    double gamma(double shape) {
        if (!(shape > 0.0)) throw ConfigError("gamma: shape must be > 0");
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0);
            double u;
            do { u = uniform01(); } while (u == 0.0);
            return g * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        const double s = x + y;
        if (s == 0.0) return 0.5;  // both underflowed; only reachable for tiny shapes
        return x / s;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Recombination weights for one channel's IMFs.
struct WeightVector {
    std::vector<double> weights;
    double residue_weight = 1.0;
};

inline WeightVector draw_weights(std::size_t n, double a, double b, RandomSource& rng) {
    if (!(a < b)) {
        throw ConfigError("draw_weights: need a < b (got a=" + std::to_string(a) +
                          ", b=" + std::to_string(b) + ")");
    }
    WeightVector w;
    w.weights.reserve(n);
    for (std::size_t i = 0; i < n; ++i) w.weights.push_back(rng.uniform(a, b));
    return w;
}

/// Mix-up coefficient drawn from Beta(alpha, alpha).
inline double draw_lambda(double alpha, RandomSource& rng) {
    if (!(alpha > 0.0)) throw ConfigError("draw_lambda: alpha must be > 0");
    return rng.beta(alpha, alpha);
}

} // namespace staug
