#pragma once

// Circular convolution with a point-spread kernel and recovery of the
// measurement's mean, power spectrum and bispectrum from the convolved one.
//
// Bispectrum convention: B[k1, k2] = y^[k1] conj(y^[k2]) y^[k2 - k1], which
// is translation invariant and transforms as
//   B_y[k1, k2] = h^[k1] conj(h^[k2]) h^[k2 - k1] B_M[k1, k2].

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "mtd/fft.hpp"
#include "mtd/grid.hpp"

namespace mtd {

struct CtfSpec {
    fft::ComplexGrid transfer; ///< h^ on the N x N frequency lattice
    RealGrid kernel;           ///< h, circularly indexed
};

CtfSpec ctf_from_kernel(const RealGrid& kernel);
/// Throws ConfigError when the transfer is not Hermitian (its kernel would
/// not be real).
CtfSpec ctf_from_transfer(const fft::ComplexGrid& transfer);
/// Radially symmetric CTF from (frequency in cycles per pixel, value) pairs,
/// linearly interpolated and held constant past both ends.
CtfSpec radial_ctf(std::size_t grid_size, std::span<const std::pair<double, double>> profile);

/// Two whitespace-separated columns per line; '#' starts a comment.
CtfSpec load_ctf_profile(const std::filesystem::path& path, std::size_t grid_size);
/// Full-lattice binary transfer (see save_ctf_grid).
CtfSpec load_ctf_grid(const std::filesystem::path& path);
void save_ctf_grid(const std::filesystem::path& path, const CtfSpec& ctf);

/// y = h * M (circular). Throws ConfigError on a size mismatch.
RealGrid apply_ctf(const RealGrid& m, const CtfSpec& ctf);

struct SpectralStatistics {
    std::size_t grid_size = 0;
    fft::Complex mean{};        ///< y^[0]
    RealGrid power;             ///< |y^[k]|^2, N x N
    int window = 0;             ///< K: bispectrum over signed frequencies in [-K, K]^2
    std::vector<fft::Complex> bispectrum; ///< index (k1 cell) * (2K+1)^2 + (k2 cell)

    int side() const { return 2 * window + 1; }
    std::size_t cell(int ky, int kx) const {
        return static_cast<std::size_t>((ky + window) * side() + (kx + window));
    }
    fft::Complex bispectrum_at(int k1y, int k1x, int k2y, int k2x) const {
        return bispectrum[cell(k1y, k1x) * static_cast<std::size_t>(side() * side()) + cell(k2y, k2x)];
    }
};

/// Throws ConfigError for a non-square grid or a window reaching Nyquist.
SpectralStatistics spectral_statistics(const RealGrid& y, int window);

/// Frequencies where |h^| <= threshold * max |h^|.
std::vector<std::pair<int, int>> inadmissible_frequencies(const CtfSpec& ctf, double threshold = 1e-6);

/// Divides out the CTF from every statistic. Throws NumericalError naming
/// the offending frequencies when the CTF is inadmissible.
SpectralStatistics deconvolve_moments(const SpectralStatistics& y, const CtfSpec& ctf, double threshold = 1e-6);

} // namespace mtd
