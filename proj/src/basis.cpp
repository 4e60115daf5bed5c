#include "mtd/basis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mtd/error.hpp"
#include "mtd/fft.hpp"

namespace mtd {
namespace {

constexpr double kRootScanStep = 0.01;
constexpr double kRootTolerance = 1e-13;
constexpr double kImagTolerance = 1e-9;

double bessel_j(int order, double x) {
    const double v = std::cyl_bessel_j(static_cast<double>(std::abs(order)), x);
    return (order < 0 && (std::abs(order) % 2 == 1)) ? -v : v;
}

double bisect_root(int order, double lo, double hi) {
    double flo = bessel_j(order, lo);
    while (hi - lo > kRootTolerance) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = bessel_j(order, mid);
        if (fmid == 0.0) return mid;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Roots of J_order in (0, limit], in increasing order.
std::vector<double> roots_of_order(int order, double limit) {
    std::vector<double> out;
    // J_nu is positive on (0, j_{nu,1}) and j_{nu,1} > nu.
    long step = std::max(1L, static_cast<long>(std::floor(order / kRootScanStep)));
    double x_prev = step * kRootScanStep;
    if (x_prev > limit) return out;
    double f_prev = bessel_j(order, x_prev);
    while (true) {
        ++step;
        double x = step * kRootScanStep;
        const bool last = x >= limit;
        if (last) x = limit;
        const double f = bessel_j(order, x);
        if (f == 0.0) {
            out.push_back(x);
        } else if ((f > 0.0) != (f_prev > 0.0) && f_prev != 0.0) {
            const double r = bisect_root(order, x_prev, x);
            if (r <= limit) out.push_back(r);
        }
        if (last) break;
        x_prev = x;
        f_prev = f;
    }
    return out;
}

} // namespace

BesselRootTable::BesselRootTable(double bandlimit, std::vector<BesselRoot> entries)
    : bandlimit_(bandlimit), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const BesselRoot& a, const BesselRoot& b) {
        return std::tie(a.order, a.index) < std::tie(b.order, b.index);
    });
}

int BesselRootTable::max_order() const {
    int m = -1;
    for (const auto& e : entries_) m = std::max(m, e.order);
    return m;
}

double BesselRootTable::root(int order, int index) const {
    for (const auto& e : entries_)
        if (e.order == order && e.index == index) return e.value;
    throw ConfigError("no Bessel root (" + std::to_string(order) + ", " + std::to_string(index) + ") in table");
}

BesselRootTable compute_bessel_roots(double bandlimit) {
    if (!(bandlimit > 0.0) || !std::isfinite(bandlimit))
        throw ConfigError("bandlimit must be a positive finite number");
    std::vector<BesselRoot> entries;
    for (int order = 0;; ++order) {
        const auto roots = roots_of_order(order, bandlimit);
        if (roots.empty()) break;
        for (std::size_t q = 0; q < roots.size(); ++q)
            entries.push_back({order, static_cast<int>(q) + 1, roots[q]});
    }
    if (entries.empty()) {
        std::ostringstream msg;
        msg << "empty basis: bandlimit " << bandlimit << " is below the first root of J_0";
        throw ConfigError(msg.str());
    }
    return BesselRootTable(bandlimit, std::move(entries));
}

double bandlimit_for_count(int count) {
    if (count < 1) throw ConfigError("coefficient count must be positive");
    for (double limit = 16.0;; limit *= 2.0) {
        const auto table = compute_bessel_roots(limit);
        std::vector<BesselRoot> sorted(table.entries().begin(), table.entries().end());
        std::sort(sorted.begin(), sorted.end(),
                  [](const BesselRoot& a, const BesselRoot& b) { return a.value < b.value; });
        int total = 0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            total += sorted[i].order == 0 ? 1 : 2;
            if (total > count) break;
            if (total == count) {
                if (i + 1 == sorted.size()) break; // need the next root; enlarge the scan
                return 0.5 * (sorted[i].value + sorted[i + 1].value);
            }
        }
        if (total > count)
            throw ConfigError("no bandlimit gives exactly " + std::to_string(count) +
                              " coefficients (mirrored orders come in pairs)");
    }
}

BasisSpec::BasisSpec(double radius, double bandlimit) : radius_(radius), roots_(compute_bessel_roots(bandlimit)) {
    if (!(radius >= 1.0) || !std::isfinite(radius)) throw ConfigError("image radius must be >= 1 pixel");
    nu_max_ = roots_.max_order();
    for (int nu = -nu_max_; nu <= nu_max_; ++nu)
        for (const auto& e : roots_.entries())
            if (e.order == std::abs(nu)) indices_.push_back({nu, e.index});
    std::size_t offset = 0;
    for (const auto& e : roots_.entries()) {
        const bool cplx = e.order > 0;
        slots_.push_back({{e.order, e.index}, offset, cplx});
        offset += cplx ? 2 : 1;
    }
    param_count_ = offset;
}

BasisSpec BasisSpec::with_coefficient_count(double radius, int count) {
    return BasisSpec(radius, bandlimit_for_count(count));
}

std::size_t BasisSpec::position(BasisIndex idx) const {
    const auto it = std::lower_bound(indices_.begin(), indices_.end(), idx);
    if (it == indices_.end() || *it != idx)
        throw ConfigError("index (" + std::to_string(idx.nu) + ", " + std::to_string(idx.q) + ") not in basis");
    return static_cast<std::size_t>(it - indices_.begin());
}

int BasisSpec::box_radius() const { return static_cast<int>(std::floor(radius_ + 1e-12)); }

int BasisSpec::dft_length() const {
    int l = static_cast<int>(std::ceil(4.0 * radius_ - 1e-9));
    return l % 2 == 0 ? l : l + 1;
}

int BasisSpec::shift_extent() const { return static_cast<int>(std::ceil(2.0 * radius_ - 1e-9)); }

int BasisSpec::neighbor_extent() const { return static_cast<int>(std::ceil(4.0 * radius_ - 1e-9)) - 2; }

std::size_t BasisSpec::disk_area() const {
    const int r = box_radius();
    std::size_t count = 0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x)
            if (std::hypot(y, x) <= radius_ + 1e-12) ++count;
    return count;
}

BasisTables::BasisTables(BasisSpec spec) : BasisTables(build_basis(spec)) {}

BasisTables::BasisTables(BasisSpec spec, std::vector<ComplexGrid> psi, std::vector<ComplexGrid> psi_hat)
    : spec_(std::move(spec)), psi_(std::move(psi)), psi_hat_(std::move(psi_hat)) {
    if (psi_.size() != spec_.coefficient_count() || psi_hat_.size() != spec_.coefficient_count())
        throw ConfigError("basis tables do not match the coefficient index set");
    build_real_basis();
}

void BasisTables::build_real_basis() {
    real_basis_.clear();
    const auto side = static_cast<std::size_t>(spec_.box_size());
    for (const auto& slot : spec_.param_slots()) {
        const ComplexGrid& p = psi_[spec_.position(slot.index)];
        RealGrid re(side, side), im(side, side);
        for (std::size_t i = 0; i < p.size(); ++i) {
            re.values()[i] = slot.is_complex ? 2.0 * p.values()[i].real() : p.values()[i].real();
            im.values()[i] = -2.0 * p.values()[i].imag();
        }
        real_basis_.push_back(std::move(re));
        if (slot.is_complex) real_basis_.push_back(std::move(im));
    }
}

BasisTables build_basis(const BasisSpec& spec) {
    const int r = spec.box_radius();
    const auto side = static_cast<std::size_t>(spec.box_size());
    const int dft = spec.dft_length();
    const double n = spec.radius();
    std::vector<ComplexGrid> psi, psi_hat;
    for (const auto& idx : spec.indices()) {
        const double root = spec.roots().root(std::abs(idx.nu), idx.q);
        ComplexGrid g(side, side);
        ComplexGrid embedded(static_cast<std::size_t>(dft), static_cast<std::size_t>(dft));
        for (int y = -r; y <= r; ++y) {
            for (int x = -r; x <= r; ++x) {
                const double rad = std::hypot(static_cast<double>(y), static_cast<double>(x));
                Complex v{0.0, 0.0};
                // J vanishes on the boundary circle; store an exact zero there.
                if (rad <= n + 1e-12 && std::abs(rad - n) > 1e-12 * n) {
                    const double theta = std::atan2(static_cast<double>(y), static_cast<double>(x));
                    v = bessel_j(idx.nu, root * rad / n) * std::polar(1.0, idx.nu * theta);
                }
                g(static_cast<std::size_t>(y + r), static_cast<std::size_t>(x + r)) = v;
                embedded(static_cast<std::size_t>((y + dft) % dft), static_cast<std::size_t>((x + dft) % dft)) = v;
            }
        }
        psi.push_back(std::move(g));
        psi_hat.push_back(fft::forward(embedded));
    }
    return BasisTables(spec, std::move(psi), std::move(psi_hat));
}

double reality_violation(const BasisSpec& spec, const CoefficientVector& alpha) {
    if (alpha.values.size() != spec.coefficient_count())
        throw ConfigError("coefficient vector does not match the basis");
    double worst = 0.0;
    for (std::size_t i = 0; i < spec.indices().size(); ++i) {
        const auto idx = spec.indices()[i];
        if (idx.nu == 0) {
            worst = std::max(worst, std::abs(alpha.values[i].imag()));
        } else if (idx.nu < 0) {
            const Complex mirror = alpha.values[spec.position({-idx.nu, idx.q})];
            const double sign = (idx.nu % 2 == 0) ? 1.0 : -1.0;
            worst = std::max(worst, std::abs(alpha.values[i] - sign * std::conj(mirror)));
        }
    }
    return worst;
}

std::vector<double> to_params(const BasisSpec& spec, const CoefficientVector& alpha) {
    if (alpha.values.size() != spec.coefficient_count())
        throw ConfigError("coefficient vector does not match the basis");
    std::vector<double> p(spec.param_count());
    for (const auto& slot : spec.param_slots()) {
        const Complex a = alpha.values[spec.position(slot.index)];
        p[slot.offset] = a.real();
        if (slot.is_complex) p[slot.offset + 1] = a.imag();
    }
    return p;
}

CoefficientVector from_params(const BasisSpec& spec, std::span<const double> params) {
    if (params.size() != spec.param_count()) throw ConfigError("parameter vector does not match the basis");
    CoefficientVector alpha{std::vector<Complex>(spec.coefficient_count())};
    for (const auto& slot : spec.param_slots()) {
        const Complex a = slot.is_complex ? Complex{params[slot.offset], params[slot.offset + 1]}
                                          : Complex{params[slot.offset], 0.0};
        alpha.values[spec.position(slot.index)] = a;
        if (slot.is_complex) {
            const double sign = (slot.index.nu % 2 == 0) ? 1.0 : -1.0;
            alpha.values[spec.position({-slot.index.nu, slot.index.q})] = sign * std::conj(a);
        }
    }
    return alpha;
}

CoefficientVector steer(const BasisSpec& spec, const CoefficientVector& alpha, double phi) {
    CoefficientVector out = alpha;
    for (std::size_t i = 0; i < spec.indices().size(); ++i)
        out.values[i] *= std::polar(1.0, spec.indices()[i].nu * phi);
    return out;
}

std::vector<double> steer_params(const BasisSpec& spec, std::span<const double> params, double phi) {
    std::vector<double> out(params.begin(), params.end());
    for (const auto& slot : spec.param_slots()) {
        if (!slot.is_complex) continue;
        const double c = std::cos(slot.index.nu * phi);
        const double s = std::sin(slot.index.nu * phi);
        const double a = params[slot.offset];
        const double b = params[slot.offset + 1];
        out[slot.offset] = a * c - b * s;
        out[slot.offset + 1] = a * s + b * c;
    }
    return out;
}

RealGrid synthesize_image(const BasisTables& tables, const CoefficientVector& alpha, double phi) {
    const BasisSpec& spec = tables.spec();
    if (alpha.values.size() != spec.coefficient_count())
        throw ConfigError("coefficient vector does not match the basis");
    const auto side = static_cast<std::size_t>(spec.box_size());
    ComplexGrid acc(side, side);
    for (std::size_t i = 0; i < spec.indices().size(); ++i) {
        const Complex w = alpha.values[i] * std::polar(1.0, spec.indices()[i].nu * phi);
        if (w == Complex{}) continue;
        const auto& psi = tables.psi(i);
        for (std::size_t j = 0; j < acc.size(); ++j) acc.values()[j] += w * psi.values()[j];
    }
    RealGrid out(side, side);
    double max_imag = 0.0, max_real = 0.0;
    for (std::size_t j = 0; j < acc.size(); ++j) {
        out.values()[j] = acc.values()[j].real();
        max_imag = std::max(max_imag, std::abs(acc.values()[j].imag()));
        max_real = std::max(max_real, std::abs(acc.values()[j].real()));
    }
    if (max_imag > kImagTolerance * std::max(1.0, max_real)) {
        std::ostringstream msg;
        msg << "coefficients violate the reality condition: max imaginary magnitude " << max_imag;
        throw NumericalError(msg.str());
    }
    return out;
}

RealGrid synthesize_params(const BasisTables& tables, std::span<const double> params, double phi) {
    const BasisSpec& spec = tables.spec();
    if (params.size() != spec.param_count()) throw ConfigError("parameter vector does not match the basis");
    const auto rotated = steer_params(spec, params, phi);
    const auto side = static_cast<std::size_t>(spec.box_size());
    RealGrid out(side, side);
    for (std::size_t p = 0; p < rotated.size(); ++p) {
        if (rotated[p] == 0.0) continue;
        const auto& basis = tables.real_basis()[p];
        for (std::size_t j = 0; j < out.size(); ++j) out.values()[j] += rotated[p] * basis.values()[j];
    }
    return out;
}

CoefficientVector expand_image(const BasisTables& tables, const RealGrid& image) {
    const BasisSpec& spec = tables.spec();
    const auto side = static_cast<std::size_t>(spec.box_size());
    if (image.rows() != side || image.cols() != side)
        throw ConfigError("image must be a " + std::to_string(side) + "x" + std::to_string(side) + " box");
    const auto& basis = tables.real_basis();
    Eigen::MatrixXd design(static_cast<Eigen::Index>(image.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t p = 0; p < basis.size(); ++p)
        for (std::size_t j = 0; j < image.size(); ++j)
            design(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) = basis[p].values()[j];
    const Eigen::Map<const Eigen::VectorXd> rhs(image.values().data(), static_cast<Eigen::Index>(image.size()));

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-10 * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    if (rank < static_cast<Eigen::Index>(basis.size())) {
        std::ostringstream msg;
        msg << "basis is rank deficient on the pixel grid: rank " << rank << " of " << basis.size();
        throw NumericalError(msg.str());
    }
    Eigen::VectorXd coeffs = svd.solve(rhs);
    std::vector<double> params(coeffs.data(), coeffs.data() + coeffs.size());
    return from_params(spec, params);
}

} // namespace mtd
