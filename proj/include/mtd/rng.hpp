#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mtd {

/// Stateless counter-based generator: every (seed, stream, counter) triple
/// maps to an independent 64-bit value, so results do not depend on the
/// order in which draws are evaluated.
class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const { return mix(key_ + mix(counter)); }

    /// Uniform in (0, 1).
    double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal pair via Box-Muller from counters 2c and 2c+1.
    void normal_pair(std::uint64_t counter, double& z0, double& z1) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        z0 = r * std::cos(t);
        z1 = r * std::sin(t);
    }

private:
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
};

} // namespace mtd
