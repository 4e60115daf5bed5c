#include "mtd/separation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtd/error.hpp"

namespace mtd {
namespace {

int window_half_width(double radius) { return static_cast<int>(std::ceil(4.0 * radius - 1e-9)) - 2; }

} // namespace

double SeparationFunctions::xi_sum() const { return std::accumulate(xi.begin(), xi.end(), 0.0); }

double SeparationFunctions::zeta_sum() const { return std::accumulate(zeta.begin(), zeta.end(), 0.0); }

SeparationFunctions empty_separation(double radius) {
    if (!(radius > 0.0)) throw ConfigError("image radius must be positive");
    SeparationFunctions sep;
    sep.half_width = window_half_width(radius);
    sep.radius = radius;
    const auto cells = static_cast<std::size_t>(sep.side()) * static_cast<std::size_t>(sep.side());
    sep.xi.assign(cells, 0.0);
    sep.zeta.assign(cells * cells, 0.0);
    return sep;
}

SeparationFunctions separation_functions(std::span<const Location> locations, double radius) {
    SeparationFunctions sep = empty_separation(radius);
    const std::size_t p = locations.size();
    sep.count = p;
    if (p < 2) return sep;

    const int w = sep.half_width;
    const auto cells = static_cast<std::size_t>(sep.side()) * static_cast<std::size_t>(sep.side());

    // Buckets of side W + 1: window neighbors lie in the 3x3 surrounding buckets.
    const int bucket = w + 1;
    int max_row = 0, max_col = 0;
    for (const auto& l : locations) {
        if (l.row < 0 || l.col < 0) throw ConfigError("locations must be non-negative");
        max_row = std::max(max_row, l.row);
        max_col = std::max(max_col, l.col);
    }
    const int brows = max_row / bucket + 1, bcols = max_col / bucket + 1;
    std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(brows) * static_cast<std::size_t>(bcols));
    for (std::size_t i = 0; i < p; ++i)
        buckets[static_cast<std::size_t>((locations[i].row / bucket) * bcols + locations[i].col / bucket)].push_back(i);

    const double inv_p = 1.0 / static_cast<double>(p);
    const double inv_p2 = inv_p * inv_p;
    std::vector<std::size_t> near;
    double inside_pairs = 0.0, inside_triplets = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        near.clear();
        const Location c = locations[i];
        const int br = c.row / bucket, bc = c.col / bucket;
        for (int r = std::max(0, br - 1); r <= std::min(brows - 1, br + 1); ++r)
            for (int q = std::max(0, bc - 1); q <= std::min(bcols - 1, bc + 1); ++q)
                for (std::size_t j : buckets[static_cast<std::size_t>(r * bcols + q)]) {
                    if (j == i) continue;
                    const int dy = c.row - locations[j].row, dx = c.col - locations[j].col;
                    if (sep.in_window(dy, dx)) near.push_back(sep.cell(dy, dx));
                }
        for (std::size_t a : near) {
            sep.xi[a] += inv_p;
            for (std::size_t b : near) sep.zeta[a * cells + b] += inv_p2;
        }
        inside_pairs += static_cast<double>(near.size());
        inside_triplets += static_cast<double>(near.size() * near.size());
    }
    const double others = static_cast<double>(p - 1);
    sep.xi_outside = (static_cast<double>(p) * others - inside_pairs) * inv_p;
    sep.zeta_outside = (static_cast<double>(p) * others * others - inside_triplets) * inv_p2;
    return sep;
}

SeparationFunctions approximate_separation(double gamma, std::size_t grid_size, double radius, std::uint64_t seed) {
    const std::size_t p = density_to_count(gamma, grid_size, radius);
    const auto locations = place_occurrences(grid_size, radius, {SpacingMode::ArbitrarySpacing, p}, seed);
    return separation_functions(locations, radius);
}

} // namespace mtd
