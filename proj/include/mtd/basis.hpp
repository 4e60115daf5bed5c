#pragma once

// Steerable Fourier-Bessel basis on the unit disk: Bessel roots, the
// coefficient index set, sampled eigenfunctions and their DFTs, and the
// synthesis/expansion maps between coefficients and pixel images.

#include <complex>
#include <span>
#include <vector>

#include "mtd/grid.hpp"

namespace mtd {

using Complex = std::complex<double>;
using ComplexGrid = Grid<Complex>;

struct BesselRoot {
    int order = 0; ///< nu >= 0
    int index = 0; ///< q >= 1
    double value = 0.0;
};

/// All positive roots of J_nu (nu >= 0) not exceeding a bandlimit.
class BesselRootTable {
public:
    BesselRootTable() = default;
    BesselRootTable(double bandlimit, std::vector<BesselRoot> entries);

    double bandlimit() const { return bandlimit_; }
    std::span<const BesselRoot> entries() const { return entries_; }
    /// Largest order with at least one root; -1 when empty.
    int max_order() const;
    /// Root lambda_{nu,q}; throws when absent.
    double root(int order, int index) const;

private:
    double bandlimit_ = 0.0;
    std::vector<BesselRoot> entries_; // sorted by (order, index)
};

/// Bracket sign changes of J_nu on a 0.01 grid and bisect to 1e-13.
/// Throws ConfigError when no root lies below the bandlimit.
BesselRootTable compute_bessel_roots(double bandlimit);

/// Bandlimit midway between the root that completes `count` coefficients
/// (counting +-nu mirrors) and the next root. Throws ConfigError when no
/// bandlimit yields exactly that count.
double bandlimit_for_count(int count);

struct BasisIndex {
    int nu = 0;
    int q = 1;
    auto operator<=>(const BasisIndex&) const = default;
};

/// Layout of one free coefficient (nu >= 0) inside the flat real parameter
/// vector: one slot for nu = 0 (real), two slots (re, im) otherwise.
struct ParamSlot {
    BasisIndex index;
    std::size_t offset = 0;
    bool is_complex = false;
};

/// Image radius, bandlimit and the coefficient index set V.
///
/// Pixel centers sit at integer offsets from the image center, the image
/// lives in a (2R+1)^2 box with R = floor(n) and the disk test |l| <= n.
class BasisSpec {
public:
    BasisSpec() = default;
    BasisSpec(double radius, double bandlimit);
    static BasisSpec with_coefficient_count(double radius, int count);

    double radius() const { return radius_; }
    double bandlimit() const { return roots_.bandlimit(); }
    int nu_max() const { return nu_max_; }
    const BesselRootTable& roots() const { return roots_; }

    /// V ordered by (nu, q), nu from -nu_max to nu_max.
    const std::vector<BasisIndex>& indices() const { return indices_; }
    std::size_t coefficient_count() const { return indices_.size(); }
    /// Position of (nu, q) in indices(); throws when absent.
    std::size_t position(BasisIndex idx) const;

    /// Free coefficients (nu >= 0) and their real parameter slots.
    const std::vector<ParamSlot>& param_slots() const { return slots_; }
    /// Number of real parameters; equals coefficient_count().
    std::size_t param_count() const { return param_count_; }

    /// Half-width of the pixel box holding the image.
    int box_radius() const;
    int box_size() const { return 2 * box_radius() + 1; }
    /// DFT length: 4n rounded up to the next even integer.
    int dft_length() const;
    /// Side of the shift window {0, ..., m-1}, m = ceil(2n).
    int shift_extent() const;
    /// Half-width of the neighbor-offset window, ceil(4n) - 2.
    int neighbor_extent() const;
    /// Number of pixels inside the disk |l| <= n.
    std::size_t disk_area() const;

    bool operator==(const BasisSpec& o) const {
        return radius_ == o.radius_ && roots_.bandlimit() == o.roots_.bandlimit();
    }

private:
    double radius_ = 0.0;
    BesselRootTable roots_;
    int nu_max_ = 0;
    std::vector<BasisIndex> indices_;
    std::vector<ParamSlot> slots_;
    std::size_t param_count_ = 0;
};

/// Complex expansion coefficients alpha over V.
struct CoefficientVector {
    std::vector<Complex> values;
};

/// Sampled eigenfunctions Psi_{nu,q} on the image box and their length-L DFTs.
class BasisTables {
public:
    explicit BasisTables(BasisSpec spec);
    BasisTables(BasisSpec spec, std::vector<ComplexGrid> psi, std::vector<ComplexGrid> psi_hat);

    const BasisSpec& spec() const { return spec_; }
    /// Psi for V entry i, box_size() x box_size(), centre at (R, R).
    const ComplexGrid& psi(std::size_t i) const { return psi_[i]; }
    /// Psi-hat for V entry i on the L x L lattice, frequency k stored at k mod L.
    const ComplexGrid& psi_hat(std::size_t i) const { return psi_hat_[i]; }

    /// Real basis images for the flat parameter vector: F = sum_p theta_p R_p.
    const std::vector<RealGrid>& real_basis() const { return real_basis_; }

private:
    void build_real_basis();

    BasisSpec spec_;
    std::vector<ComplexGrid> psi_;
    std::vector<ComplexGrid> psi_hat_;
    std::vector<RealGrid> real_basis_;
};

/// Builds Psi on the box and Psi-hat by FFT of the zero-embedded L x L array.
BasisTables build_basis(const BasisSpec& spec);

/// Largest |alpha_{-nu,q} - (-1)^nu conj(alpha_{nu,q})| over V, and |Im alpha_{0,q}|.
double reality_violation(const BasisSpec& spec, const CoefficientVector& alpha);

/// Flat real parameters (free coefficients) from alpha. Mirrors are ignored.
std::vector<double> to_params(const BasisSpec& spec, const CoefficientVector& alpha);
/// alpha satisfying the reality rule alpha_{-nu,q} = (-1)^nu conj(alpha_{nu,q}).
CoefficientVector from_params(const BasisSpec& spec, std::span<const double> params);

/// Multiplies each alpha_{nu,q} by e^{i nu phi}.
CoefficientVector steer(const BasisSpec& spec, const CoefficientVector& alpha, double phi);
/// Same rotation acting on the flat parameter vector.
std::vector<double> steer_params(const BasisSpec& spec, std::span<const double> params, double phi);

/// F_phi[l] = sum alpha Psi[l] e^{i nu phi}. Throws NumericalError when the
/// imaginary residue exceeds 1e-9.
RealGrid synthesize_image(const BasisTables& tables, const CoefficientVector& alpha, double phi = 0.0);
RealGrid synthesize_params(const BasisTables& tables, std::span<const double> params, double phi = 0.0);

/// Least-squares projection of a box image onto the basis span.
/// Throws NumericalError when the discretized basis is rank deficient.
CoefficientVector expand_image(const BasisTables& tables, const RealGrid& image);

} // namespace mtd
