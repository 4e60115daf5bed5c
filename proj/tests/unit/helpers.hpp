#pragma once

#include <random>
#include <vector>

#include "mtd/basis.hpp"

namespace mtd::testing {

inline std::vector<double> random_params(const BasisSpec& spec, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> p(spec.param_count());
    for (double& v : p) v = dist(gen);
    return p;
}

inline CoefficientVector random_alpha(const BasisSpec& spec, std::uint64_t seed, double scale = 1.0) {
    return from_params(spec, random_params(spec, seed, scale));
}

inline RealGrid random_grid(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    RealGrid g(rows, cols);
    for (double& v : g.values()) v = dist(gen);
    return g;
}

template <typename A, typename B>
double max_abs_diff(const A& a, const B& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace mtd::testing
