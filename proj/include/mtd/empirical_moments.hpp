#pragma once

// First three autocorrelations of a measurement over the shift window
// L = {0, ..., m-1}^2, with zero padding outside the grid.

#include <cstddef>
#include <vector>

#include "mtd/grid.hpp"
#include "mtd/measurement.hpp"

namespace mtd {

struct MomentSet {
    double a1 = 0.0;
    /// a2[y * m + x]
    std::vector<double> a2;
    /// a3[i1 * m^2 + i2], i = y * m + x for each shift.
    std::vector<double> a3;
    int extent = 0; ///< m
    std::size_t grid_size = 0;
    double radius = 0.0;

    std::size_t shift_count() const { return static_cast<std::size_t>(extent) * static_cast<std::size_t>(extent); }
    double a2_at(int y, int x) const { return a2[static_cast<std::size_t>(y * extent + x)]; }
    double a3_at(int y1, int x1, int y2, int x2) const {
        return a3[static_cast<std::size_t>(y1 * extent + x1) * shift_count() + static_cast<std::size_t>(y2 * extent + x2)];
    }
};

enum class AcMethod {
    Direct, ///< row-blocked direct sums, O(N^2 m^4)
    Fft,    ///< per-shift FFT cross-correlation on a zero-padded grid
};

/// Throws ConfigError when the window is not smaller than the grid.
MomentSet empirical_ac(const RealGrid& grid, double radius, AcMethod method = AcMethod::Direct);
MomentSet empirical_ac(const Measurement& m, AcMethod method = AcMethod::Direct);

/// Equal-weight running mean of moment sets from several measurements.
class MomentAccumulator {
public:
    /// Throws ConfigError when (N, n) differs from earlier inputs.
    void add(const MomentSet& ms);
    std::size_t count() const { return count_; }
    /// Throws ConfigError when nothing was added.
    MomentSet mean() const;

private:
    MomentSet sum_;
    std::size_t count_ = 0;
};

struct NoiseFloorDiagnostics {
    double a2_zero_residual = 0.0;    ///< a2[0] - (rate S2[0] + sigma^2)
    double a2_offzero_max_abs = 0.0;  ///< max |a2[l]| over l != 0
    double spike_prediction = 0.0;    ///< rate S1 sigma^2
    double spike_l1_mean = 0.0;       ///< mean of a3[0, l], l != 0
    double spike_l2_mean = 0.0;       ///< mean of a3[l, 0], l != 0
    double spike_diagonal_mean = 0.0; ///< mean of a3[l, l], l != 0
};

/// Noise-term bookkeeping for simulations where sigma, gamma and the image
/// mean are known. `s2_zero` is the image's S2[0] (0 for pure noise).
NoiseFloorDiagnostics noise_floor_check(const MomentSet& ms, double sigma, double gamma, double s1,
                                        double s2_zero = 0.0);

} // namespace mtd
