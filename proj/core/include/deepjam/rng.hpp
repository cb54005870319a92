#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace deepjam {

/// Deterministic random stream: raw bits from mt19937_64, floating-point
/// draws via explicit bit manipulation so results do not depend on the
/// standard library's distribution implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : rng_(seed) {}

    double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    /// Box-Muller, one value per call (the cosine branch only).
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    std::uint64_t bits() { return rng_(); }

private:
    std::mt19937_64 rng_;
};

}  // namespace deepjam
