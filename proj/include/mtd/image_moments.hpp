#pragma once

// Rotationally averaged image moments S1, S2, S2pair, S3, S3pair, S3trip,
// evaluated on the length-L DFT lattice of the basis with exact angular
// quadrature, plus their derivatives with respect to the flat parameters.
//
// Spatial conventions (c = 1/4n^2, G0 = rotational average of F):
//   S2[l]          = c E sum_x F[x] F[x+l]
//   S2pair[l]      = c sum_x G0[x] G0[x+l]
//   S3[l1, l2]     = c E sum_x F[x] F[x+l1] F[x+l2]
//   S3pair[u, v]   = c E sum_x F[x] F[x+u] G0[x+v]
//   S3trip[l1, l2] = c sum_x G0[x] G0[x+l1] G0[x+l2]
// Frequency-domain tensors index k1 * L^2 + k2 with k = ky * L + kx.

#include <span>
#include <vector>

#include "mtd/basis.hpp"

namespace mtd {

/// Per-parameter basis transforms on the L x L lattice and the quadrature
/// angles; built once per basis and shared by every evaluation.
class FreqVectors {
public:
    /// Angle counts default to 4 nu_max + 1 (second order) and 6 nu_max
    /// (third order), both at least 1.
    explicit FreqVectors(const BasisTables& tables, int second_order_angles = 0, int third_order_angles = 0);

    const BasisSpec& spec() const { return spec_; }
    int length() const { return length_; }
    std::size_t lattice_size() const { return lattice_; }
    double normalization() const { return norm_; }

    /// Transform of the real basis image for parameter p.
    std::span<const Complex> basis_hat(std::size_t p) const { return basis_hat_[p]; }
    /// Parameters of the nu = 0 coefficients.
    std::span<const std::size_t> dc_params() const { return dc_params_; }
    std::span<const double> angles2() const { return angles2_; }
    std::span<const double> angles3() const { return angles3_; }

    std::size_t negate(std::size_t k) const { return negate_[k]; }
    /// Lattice index of -(k1 + k2).
    std::size_t closing(std::size_t k1, std::size_t k2) const { return closing_[k1 * lattice_ + k2]; }

    /// DFT of the image rotated by phi.
    std::vector<Complex> image_hat(std::span<const double> params, double phi) const;
    /// DFT of the rotational average (nu = 0 part).
    std::vector<Complex> dc_hat(std::span<const double> params) const;

private:
    BasisSpec spec_;
    int length_ = 0;
    std::size_t lattice_ = 0;
    double norm_ = 0.0;
    std::vector<std::vector<Complex>> basis_hat_;
    std::vector<std::size_t> dc_params_;
    std::vector<double> angles2_, angles3_;
    std::vector<std::size_t> negate_;
    std::vector<std::size_t> closing_;
};

struct ImageMoments {
    int length = 0;
    double s1 = 0.0;
    std::vector<Complex> s2, s2pair;         // L^2
    std::vector<Complex> s3, s3pair, s3trip; // L^4
};

double s1(const FreqVectors& fv, std::span<const double> params);
std::vector<Complex> s2_hat(const FreqVectors& fv, std::span<const double> params);
std::vector<Complex> s2pair_hat(const FreqVectors& fv, std::span<const double> params);
std::vector<Complex> s3_hat(const FreqVectors& fv, std::span<const double> params);
std::vector<Complex> s3pair_hat(const FreqVectors& fv, std::span<const double> params);
std::vector<Complex> s3trip_hat(const FreqVectors& fv, std::span<const double> params);

ImageMoments image_moments(const FreqVectors& fv, std::span<const double> params);

/// Spatial moments on the cyclic L lattice. Offsets with a coordinate of
/// magnitude >= L/2 lie outside every moment's support and read as zero.
struct SpatialMoments {
    int length = 0;
    double s1 = 0.0;
    std::vector<double> s2, s2pair, s3, s3pair, s3trip;
    double max_imag_residue = 0.0;

    /// Lattice index of offset (y, x), or -1 outside |y|, |x| < L/2.
    long index(int y, int x) const {
        const int h = length / 2;
        if (y <= -h || y >= h || x <= -h || x >= h) return -1;
        return static_cast<long>(((y + length) % length) * length + (x + length) % length);
    }
    double at2(const std::vector<double>& t, int y, int x) const {
        const long i = index(y, x);
        return i < 0 ? 0.0 : t[static_cast<std::size_t>(i)];
    }
    double at3(const std::vector<double>& t, int y1, int x1, int y2, int x2) const {
        const long i = index(y1, x1), j = index(y2, x2);
        if (i < 0 || j < 0) return 0.0;
        return t[static_cast<std::size_t>(i) * static_cast<std::size_t>(length * length) + static_cast<std::size_t>(j)];
    }
};

/// Inverse DFT of every tensor. Throws NumericalError when an imaginary
/// residue exceeds 1e-9 relative to the tensor's largest entry.
SpatialMoments to_spatial(const ImageMoments& m);

/// d(moment entry)/d(theta_p) for each parameter p: outer index p, inner the
/// frequency-domain entry.
struct MomentJacobians {
    std::vector<double> s1;
    std::vector<std::vector<Complex>> s2, s2pair, s3, s3pair, s3trip;
};

MomentJacobians grad_moments(const FreqVectors& fv, std::span<const double> params);

/// Weights on the spatial moments (same layout as SpatialMoments); empty
/// vectors mean zero weight.
struct SpatialCotangents {
    double s1 = 0.0;
    std::vector<double> s2, s2pair, s3, s3pair, s3trip;
};

/// Gradient of sum_l w[l] S[l] over every tensor, with respect to theta.
std::vector<double> moments_vjp(const FreqVectors& fv, std::span<const double> params, const SpatialCotangents& w);

} // namespace mtd
