#include "mtd/measurement.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include "mtd/error.hpp"
#include "mtd/rng.hpp"

namespace mtd {
namespace {

constexpr std::uint64_t kAngleStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

// Buckets of side `separation`: any conflicting point lies in one of the 3x3
// buckets around a candidate.
class OccupancyIndex {
public:
    OccupancyIndex(std::size_t grid_size, int separation)
        : sep_(separation), side_(static_cast<int>(grid_size) / separation + 1),
          buckets_(static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_)) {}

    bool conflicts(Location c) const {
        const int br = c.row / sep_, bc = c.col / sep_;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int r = br + dr, cc = bc + dc;
                if (r < 0 || cc < 0 || r >= side_ || cc >= side_) continue;
                for (const auto& o : buckets_[static_cast<std::size_t>(r * side_ + cc)])
                    if (std::abs(o.row - c.row) < sep_ && std::abs(o.col - c.col) < sep_) return true;
            }
        }
        return false;
    }

    void insert(Location c) {
        buckets_[static_cast<std::size_t>((c.row / sep_) * side_ + c.col / sep_)].push_back(c);
    }

private:
    int sep_;
    int side_;
    std::vector<std::vector<Location>> buckets_;
};

} // namespace

int minimum_separation(SpacingMode mode, double radius) {
    const double d = mode == SpacingMode::WellSeparated ? 4.0 * radius - 1.0 : 2.0 * radius;
    return static_cast<int>(std::ceil(d - 1e-9));
}

std::size_t density_to_count(double gamma, std::size_t grid_size, double radius) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("density must lie in (0, 1)");
    const double n2 = static_cast<double>(grid_size) * static_cast<double>(grid_size);
    const double p = std::round(gamma * n2 / (std::numbers::pi * radius * radius));
    if (p < 1.0) throw ConfigError("density too small: fewer than one occurrence fits the grid");
    const int box = static_cast<int>(std::floor(radius + 1e-12));
    const double usable = static_cast<double>(grid_size) - 2.0 * box;
    const double sep = minimum_separation(SpacingMode::ArbitrarySpacing, radius);
    const double capacity = std::pow(std::floor((usable - 1.0) / sep) + 1.0, 2.0);
    if (usable < 1.0 || p > capacity) {
        std::ostringstream msg;
        msg << "density " << gamma << " asks for " << p << " occurrences but at most " << capacity
            << " non-overlapping copies fit";
        throw ConfigError(msg.str());
    }
    return static_cast<std::size_t>(p);
}

double count_to_density(std::size_t count, std::size_t grid_size, double radius) {
    const double n2 = static_cast<double>(grid_size) * static_cast<double>(grid_size);
    return static_cast<double>(count) * std::numbers::pi * radius * radius / n2;
}

double occupancy_rate(double gamma) { return gamma * 4.0 / std::numbers::pi; }

std::vector<Location> place_occurrences(std::size_t grid_size, double radius, const PlacementPolicy& policy,
                                        std::uint64_t seed) {
    const int box = static_cast<int>(std::floor(radius + 1e-12));
    const int lo = box;
    const int hi = static_cast<int>(grid_size) - 1 - box;
    if (hi < lo) throw ConfigError("grid is smaller than one image");
    const int sep = minimum_separation(policy.mode, radius);

    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> coord(lo, hi);
    OccupancyIndex index(grid_size, sep);
    std::vector<Location> out;
    out.reserve(policy.count);
    const std::size_t budget = 100 * std::max<std::size_t>(policy.count, 1);
    for (std::size_t attempt = 0; attempt < budget && out.size() < policy.count; ++attempt) {
        const Location c{coord(gen), coord(gen)};
        if (index.conflicts(c)) continue;
        index.insert(c);
        out.push_back(c);
    }
    if (out.size() < policy.count) {
        std::ostringstream msg;
        msg << "placement saturated: placed " << out.size() << " of " << policy.count << " occurrences after "
            << budget << " attempts";
        throw NumericalError(msg.str());
    }
    return out;
}

std::vector<double> draw_angles(std::size_t count, std::uint64_t seed) {
    const CounterRng rng(seed, kAngleStream);
    std::vector<double> angles(count);
    for (std::size_t i = 0; i < count; ++i) angles[i] = 2.0 * std::numbers::pi * rng.uniform(i);
    return angles;
}

Measurement render_measurement(std::size_t grid_size, const BasisTables& tables, const CoefficientVector& alpha,
                               std::span<const Location> locations, std::span<const double> angles, double sigma,
                               std::uint64_t seed) {
    if (angles.size() != locations.size()) throw ConfigError("one angle per location required");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("noise level must be finite and >= 0");
    const BasisSpec& spec = tables.spec();
    const int box = spec.box_radius();
    const int side = spec.box_size();
    const auto params = to_params(spec, alpha);
    if (reality_violation(spec, alpha) > 1e-9) throw NumericalError("coefficients violate the reality condition");

    Measurement m;
    m.grid = RealGrid(grid_size, grid_size);
    m.radius = spec.radius();
    m.sigma = sigma;
    m.seed = seed;
    std::vector<Placement> placements;
    placements.reserve(locations.size());
    const int last = static_cast<int>(grid_size) - 1;
    for (std::size_t i = 0; i < locations.size(); ++i) {
        const Location c = locations[i];
        if (c.row - box < 0 || c.col - box < 0 || c.row + box > last || c.col + box > last) {
            std::ostringstream msg;
            msg << "occurrence at (" << c.row << ", " << c.col << ") crosses the grid boundary";
            throw ConfigError(msg.str());
        }
        const RealGrid img = synthesize_params(tables, params, angles[i]);
        for (int y = 0; y < side; ++y) {
            double* dst = m.grid.row(static_cast<std::size_t>(c.row - box + y)) + (c.col - box);
            const double* src = img.row(static_cast<std::size_t>(y));
            for (int x = 0; x < side; ++x) dst[x] += src[x];
        }
        placements.push_back({c, angles[i]});
    }
    m.placements = std::move(placements);

    if (sigma > 0.0) {
        const CounterRng rng(seed, kNoiseStream);
        auto values = m.grid.values();
        const std::size_t total = values.size();
        for (std::size_t c = 0; 2 * c < total; ++c) {
            double z0, z1;
            rng.normal_pair(c, z0, z1);
            values[2 * c] += sigma * z0;
            if (2 * c + 1 < total) values[2 * c + 1] += sigma * z1;
        }
    }
    return m;
}

Measurement render_measurement(std::size_t grid_size, const BasisTables& tables, const CoefficientVector& alpha,
                               std::span<const Location> locations, double sigma, std::uint64_t seed) {
    const auto angles = draw_angles(locations.size(), seed);
    return render_measurement(grid_size, tables, alpha, locations, angles, sigma, seed);
}

double snr_to_sigma(const BasisTables& tables, const CoefficientVector& alpha, double snr) {
    if (!(snr > 0.0)) throw ConfigError("SNR must be positive");
    const RealGrid f = synthesize_image(tables, alpha, 0.0);
    double energy = 0.0;
    for (double v : f.values()) energy += v * v;
    if (energy == 0.0) throw NumericalError("zero-energy image has no defined SNR");
    if (std::isinf(snr)) return 0.0;
    return std::sqrt(energy / (static_cast<double>(tables.spec().disk_area()) * snr));
}

} // namespace mtd
