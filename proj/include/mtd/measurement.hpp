#pragma once

// Synthetic measurements: non-overlapping randomly rotated copies of an
// image on an N x N grid plus i.i.d. Gaussian noise.

#include <cstdint>
#include <optional>
#include <vector>

#include "mtd/basis.hpp"
#include "mtd/grid.hpp"

namespace mtd {

/// Centre pixel (0-based row, column) of one occurrence.
struct Location {
    int row = 0;
    int col = 0;
    auto operator<=>(const Location&) const = default;
};

struct Placement {
    Location location;
    double angle = 0.0;
};

enum class SpacingMode { WellSeparated, ArbitrarySpacing };

/// Chebyshev separation demanded by the policy: 4n - 1 (well separated) or
/// 2n (non-overlapping), rounded up to an integer.
int minimum_separation(SpacingMode mode, double radius);

struct PlacementPolicy {
    SpacingMode mode = SpacingMode::ArbitrarySpacing;
    std::size_t count = 0;
};

struct Measurement {
    RealGrid grid;
    double radius = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::optional<std::vector<Placement>> placements;

    std::size_t size() const { return grid.rows(); }
};

/// p = round(gamma N^2 / (pi n^2)). Throws ConfigError when gamma is not in
/// (0, 1), when p < 1, or when p copies cannot fit even in a dense packing.
std::size_t density_to_count(double gamma, std::size_t grid_size, double radius);
double count_to_density(std::size_t count, std::size_t grid_size, double radius);

/// Expected occurrences per 4n^2 pixels for density gamma, i.e. gamma * 4/pi.
/// Image moments are normalized by 4n^2 while gamma counts disk areas pi n^2;
/// every moment relation scales by this rate rather than by gamma itself.
double occupancy_rate(double gamma);

/// Uniform rejection sampling with an attempt budget of 100 p.
/// Throws NumericalError reporting the achieved count on saturation.
std::vector<Location> place_occurrences(std::size_t grid_size, double radius, const PlacementPolicy& policy,
                                        std::uint64_t seed);

/// Rotation angles drawn Unif[0, 2pi), keyed by occurrence index.
std::vector<double> draw_angles(std::size_t count, std::uint64_t seed);

/// Sum of rotated copies plus N(0, sigma^2) noise. Throws ConfigError when a
/// copy would cross the grid boundary.
Measurement render_measurement(std::size_t grid_size, const BasisTables& tables, const CoefficientVector& alpha,
                               std::span<const Location> locations, std::span<const double> angles, double sigma,
                               std::uint64_t seed);
/// Angles drawn from `seed`.
Measurement render_measurement(std::size_t grid_size, const BasisTables& tables, const CoefficientVector& alpha,
                               std::span<const Location> locations, double sigma, std::uint64_t seed);

/// sigma = sqrt(||F||_F^2 / (A snr)) with A the disk pixel count. snr may be
/// +infinity (sigma = 0). Throws NumericalError for a zero-energy image.
double snr_to_sigma(const BasisTables& tables, const CoefficientVector& alpha, double snr);

} // namespace mtd
