#pragma once

// Pair and triplet separation functions of a placement list, on the neighbor
// window {-W, ..., W}^2 with W = ceil(4n) - 2. Offsets follow the definition
// d = (centre location) - (neighbor location).

#include <cstdint>
#include <span>
#include <vector>

#include "mtd/measurement.hpp"

namespace mtd {

struct SeparationFunctions {
    int half_width = 0;
    std::size_t count = 0; ///< p
    double radius = 0.0;
    /// xi[(dy + W) * side + (dx + W)] = (1/p) #{ordered pairs (i, j), j != i, l_i - l_j = d}
    std::vector<double> xi;
    /// zeta[a * side^2 + b] = (1/p^2) #{(i, j1, j2), j1, j2 != i, l_i - l_j1 = d1, l_i - l_j2 = d2};
    /// j1 = j2 is included, so zeta[d, d] = xi[d] / p.
    std::vector<double> zeta;
    /// Mass of the same sums falling outside the window.
    double xi_outside = 0.0;
    double zeta_outside = 0.0;

    int side() const { return 2 * half_width + 1; }
    std::size_t cell(int dy, int dx) const {
        return static_cast<std::size_t>((dy + half_width) * side() + (dx + half_width));
    }
    bool in_window(int dy, int dx) const {
        return dy >= -half_width && dy <= half_width && dx >= -half_width && dx <= half_width;
    }
    double xi_at(int dy, int dx) const { return in_window(dy, dx) ? xi[cell(dy, dx)] : 0.0; }
    double zeta_at(int dy1, int dx1, int dy2, int dx2) const {
        if (!in_window(dy1, dx1) || !in_window(dy2, dx2)) return 0.0;
        const std::size_t s = static_cast<std::size_t>(side()) * static_cast<std::size_t>(side());
        return zeta[cell(dy1, dx1) * s + cell(dy2, dx2)];
    }
    double xi_sum() const;
    double zeta_sum() const;
};

/// All-zero functions (the well-separated model).
SeparationFunctions empty_separation(double radius);

/// Histograms of the placement list restricted to the neighbor window.
SeparationFunctions separation_functions(std::span<const Location> locations, double radius);

/// Separation functions of a synthetic, never rendered, arbitrary-spacing
/// placement with p = density_to_count(gamma, N, n).
SeparationFunctions approximate_separation(double gamma, std::size_t grid_size, double radius, std::uint64_t seed);

} // namespace mtd
