#pragma once

// Seeded randomness shared by every module. All draws go through Rng
// (mt19937_64, whose output sequence is fixed by the standard) and the helpers
// below, so results do not depend on the standard library's distribution code.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace crowdtopic {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for sub-task `index` of a run governed by `master`:
/// splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019)).
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection; n must be > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

template <class T>
void shuffle(std::span<T> items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[uniform_index(rng, i)]);
    }
}

/// Standard normal via Box-Muller (one value per call, the pair's second half is discarded).
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// log of a Gamma(shape, 1) draw. Marsaglia-Tsang for shape >= 1; for shape < 1
/// the boost Gamma(shape + 1) * U^(1/shape) is applied in log space so tiny
/// shapes do not underflow.
inline double log_gamma_draw(Rng& rng, double shape) {
    if (shape < 1.0) {
        double u = uniform01(rng);
        while (u <= 0.0) u = uniform01(rng);
        return log_gamma_draw(rng, shape + 1.0) + std::log(u) / shape;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = standard_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01(rng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v);
    }
}

/// Poisson draw; Knuth's product method below 30, normal approximation above.
inline std::size_t poisson_draw(Rng& rng, double mean) {
    if (mean < 30.0) {
        const double limit = std::exp(-mean);
        std::size_t k = 0;
        double p = uniform01(rng);
        while (p > limit) {
            ++k;
            p *= uniform01(rng);
        }
        return k;
    }
    const double x = std::round(mean + std::sqrt(mean) * standard_normal(rng));
    return x < 0.0 ? 0 : static_cast<std::size_t>(x);
}

} // namespace crowdtopic
