#include "mtd/image_moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mtd/error.hpp"
#include "mtd/fft.hpp"

namespace mtd {
namespace {

std::vector<double> uniform_angles(int count) {
    std::vector<double> a(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) a[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * i / count;
    return a;
}

std::vector<std::vector<Complex>> rotated_images(const FreqVectors& fv, std::span<const double> params,
                                                 std::span<const double> angles) {
    std::vector<std::vector<Complex>> out;
    out.reserve(angles.size());
    for (double phi : angles) out.push_back(fv.image_hat(params, phi));
    return out;
}

// Q[k1, k2] = mean_a F_a[k1] F_a[-k1-k2], the same-instance factor of S3pair.
std::vector<Complex> pair_factor(const FreqVectors& fv, const std::vector<std::vector<Complex>>& images) {
    const std::size_t s = fv.lattice_size();
    std::vector<Complex> q(s * s);
    for (const auto& f : images)
        for (std::size_t k1 = 0; k1 < s; ++k1)
            for (std::size_t k2 = 0; k2 < s; ++k2) q[k1 * s + k2] += f[k1] * f[fv.closing(k1, k2)];
    const double w = 1.0 / static_cast<double>(images.size());
    for (auto& v : q) v *= w;
    return q;
}

std::vector<Complex> second_from(const FreqVectors& fv, const std::vector<std::vector<Complex>>& images) {
    std::vector<Complex> out(fv.lattice_size());
    for (const auto& f : images)
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += std::norm(f[k]);
    const double w = fv.normalization() / static_cast<double>(images.size());
    for (auto& v : out) v *= w;
    return out;
}

std::vector<Complex> second_pair_from(const FreqVectors& fv, const std::vector<Complex>& g0) {
    std::vector<Complex> out(fv.lattice_size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = fv.normalization() * std::norm(g0[k]);
    return out;
}

std::vector<Complex> third_from(const FreqVectors& fv, const std::vector<std::vector<Complex>>& images) {
    const std::size_t s = fv.lattice_size();
    std::vector<Complex> out(s * s);
    for (const auto& f : images)
        for (std::size_t k1 = 0; k1 < s; ++k1) {
            const Complex a = f[k1];
            for (std::size_t k2 = 0; k2 < s; ++k2) out[k1 * s + k2] += a * f[k2] * f[fv.closing(k1, k2)];
        }
    const double w = fv.normalization() / static_cast<double>(images.size());
    for (auto& v : out) v *= w;
    return out;
}

std::vector<Complex> third_pair_from(const FreqVectors& fv, const std::vector<Complex>& q,
                                     const std::vector<Complex>& g0) {
    const std::size_t s = fv.lattice_size();
    std::vector<Complex> out(s * s);
    for (std::size_t k1 = 0; k1 < s; ++k1)
        for (std::size_t k2 = 0; k2 < s; ++k2) out[k1 * s + k2] = fv.normalization() * g0[k2] * q[k1 * s + k2];
    return out;
}

std::vector<Complex> third_trip_from(const FreqVectors& fv, const std::vector<Complex>& g0) {
    const std::size_t s = fv.lattice_size();
    std::vector<Complex> out(s * s);
    for (std::size_t k1 = 0; k1 < s; ++k1)
        for (std::size_t k2 = 0; k2 < s; ++k2)
            out[k1 * s + k2] = fv.normalization() * g0[k1] * g0[k2] * g0[fv.closing(k1, k2)];
    return out;
}

std::vector<double> realize(std::vector<Complex> t, std::span<const int> dims, double& residue) {
    fft::inverse_nd(t, dims);
    std::vector<double> out(t.size());
    double max_re = 0.0, max_im = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        out[i] = t[i].real();
        max_re = std::max(max_re, std::abs(t[i].real()));
        max_im = std::max(max_im, std::abs(t[i].imag()));
    }
    const double rel = max_re > 0.0 ? max_im / max_re : max_im;
    residue = std::max(residue, rel);
    return out;
}

std::vector<Complex> cotangent_hat(const std::vector<double>& w, std::span<const int> dims) {
    std::vector<Complex> h(w.begin(), w.end());
    fft::inverse_nd(h, dims);
    return h;
}

} // namespace

FreqVectors::FreqVectors(const BasisTables& tables, int second_order_angles, int third_order_angles)
    : spec_(tables.spec()), length_(spec_.dft_length()) {
    const auto len = static_cast<std::size_t>(length_);
    lattice_ = len * len;
    norm_ = 1.0 / (4.0 * spec_.radius() * spec_.radius());
    const int r = spec_.box_radius();
    for (const auto& basis : tables.real_basis()) {
        ComplexGrid embedded(len, len);
        for (int y = -r; y <= r; ++y)
            for (int x = -r; x <= r; ++x)
                embedded(static_cast<std::size_t>((y + length_) % length_), static_cast<std::size_t>((x + length_) % length_)) =
                    basis(static_cast<std::size_t>(y + r), static_cast<std::size_t>(x + r));
        const auto hat = fft::forward(embedded);
        basis_hat_.emplace_back(hat.values().begin(), hat.values().end());
    }
    for (const auto& slot : spec_.param_slots())
        if (slot.index.nu == 0) dc_params_.push_back(slot.offset);

    const int nu_max = spec_.nu_max();
    const int a2 = second_order_angles > 0 ? second_order_angles : 4 * nu_max + 1;
    const int a3 = third_order_angles > 0 ? third_order_angles : std::max(1, 6 * nu_max);
    angles2_ = uniform_angles(a2);
    angles3_ = uniform_angles(a3);

    negate_.resize(lattice_);
    closing_.resize(lattice_ * lattice_);
    for (std::size_t k1 = 0; k1 < lattice_; ++k1) {
        const std::size_t y1 = k1 / len, x1 = k1 % len;
        negate_[k1] = ((len - y1) % len) * len + (len - x1) % len;
        for (std::size_t k2 = 0; k2 < lattice_; ++k2) {
            const std::size_t y2 = k2 / len, x2 = k2 % len;
            const std::size_t ys = (2 * len - y1 - y2) % len, xs = (2 * len - x1 - x2) % len;
            closing_[k1 * lattice_ + k2] = ys * len + xs;
        }
    }
}

std::vector<Complex> FreqVectors::image_hat(std::span<const double> params, double phi) const {
    if (params.size() != basis_hat_.size()) throw ConfigError("parameter vector does not match the basis");
    const auto rotated = phi == 0.0 ? std::vector<double>(params.begin(), params.end()) : steer_params(spec_, params, phi);
    std::vector<Complex> out(lattice_);
    for (std::size_t p = 0; p < rotated.size(); ++p) {
        if (rotated[p] == 0.0) continue;
        const auto& b = basis_hat_[p];
        for (std::size_t k = 0; k < lattice_; ++k) out[k] += rotated[p] * b[k];
    }
    return out;
}

std::vector<Complex> FreqVectors::dc_hat(std::span<const double> params) const {
    if (params.size() != basis_hat_.size()) throw ConfigError("parameter vector does not match the basis");
    std::vector<Complex> out(lattice_);
    for (std::size_t p : dc_params_) {
        const auto& b = basis_hat_[p];
        for (std::size_t k = 0; k < lattice_; ++k) out[k] += params[p] * b[k];
    }
    return out;
}

double s1(const FreqVectors& fv, std::span<const double> params) {
    double total = 0.0;
    for (std::size_t p : fv.dc_params()) total += params[p] * fv.basis_hat(p)[0].real();
    return fv.normalization() * total;
}

std::vector<Complex> s2_hat(const FreqVectors& fv, std::span<const double> params) {
    return second_from(fv, rotated_images(fv, params, fv.angles2()));
}

std::vector<Complex> s2pair_hat(const FreqVectors& fv, std::span<const double> params) {
    return second_pair_from(fv, fv.dc_hat(params));
}

std::vector<Complex> s3_hat(const FreqVectors& fv, std::span<const double> params) {
    return third_from(fv, rotated_images(fv, params, fv.angles3()));
}

std::vector<Complex> s3pair_hat(const FreqVectors& fv, std::span<const double> params) {
    return third_pair_from(fv, pair_factor(fv, rotated_images(fv, params, fv.angles2())), fv.dc_hat(params));
}

std::vector<Complex> s3trip_hat(const FreqVectors& fv, std::span<const double> params) {
    return third_trip_from(fv, fv.dc_hat(params));
}

ImageMoments image_moments(const FreqVectors& fv, std::span<const double> params) {
    ImageMoments m;
    m.length = fv.length();
    m.s1 = s1(fv, params);
    const auto images2 = rotated_images(fv, params, fv.angles2());
    const auto images3 = rotated_images(fv, params, fv.angles3());
    const auto g0 = fv.dc_hat(params);
    m.s2 = second_from(fv, images2);
    m.s2pair = second_pair_from(fv, g0);
    m.s3 = third_from(fv, images3);
    m.s3pair = third_pair_from(fv, pair_factor(fv, images2), g0);
    m.s3trip = third_trip_from(fv, g0);
    return m;
}

SpatialMoments to_spatial(const ImageMoments& m) {
    SpatialMoments s;
    s.length = m.length;
    s.s1 = m.s1;
    const int d2[2] = {m.length, m.length};
    const int d4[4] = {m.length, m.length, m.length, m.length};
    s.s2 = realize(m.s2, d2, s.max_imag_residue);
    s.s2pair = realize(m.s2pair, d2, s.max_imag_residue);
    s.s3 = realize(m.s3, d4, s.max_imag_residue);
    s.s3pair = realize(m.s3pair, d4, s.max_imag_residue);
    s.s3trip = realize(m.s3trip, d4, s.max_imag_residue);
    if (s.max_imag_residue > 1e-9) {
        std::ostringstream msg;
        msg << "spatial moments are not real: relative imaginary residue " << s.max_imag_residue;
        throw NumericalError(msg.str());
    }
    return s;
}

MomentJacobians grad_moments(const FreqVectors& fv, std::span<const double> params) {
    const std::size_t s = fv.lattice_size();
    const std::size_t np = params.size();
    const double c = fv.normalization();
    const auto images2 = rotated_images(fv, params, fv.angles2());
    const auto images3 = rotated_images(fv, params, fv.angles3());
    const auto g0 = fv.dc_hat(params);
    const auto q = pair_factor(fv, images2);

    std::vector<bool> is_dc(np, false);
    for (std::size_t p : fv.dc_params()) is_dc[p] = true;

    MomentJacobians j;
    j.s1.assign(np, 0.0);
    j.s2.assign(np, std::vector<Complex>(s));
    j.s2pair.assign(np, std::vector<Complex>(s));
    j.s3.assign(np, std::vector<Complex>(s * s));
    j.s3pair.assign(np, std::vector<Complex>(s * s));
    j.s3trip.assign(np, std::vector<Complex>(s * s));

    std::vector<double> unit(np, 0.0);
    for (std::size_t p = 0; p < np; ++p) {
        unit.assign(np, 0.0);
        unit[p] = 1.0;

        const double w2 = c / static_cast<double>(images2.size());
        for (std::size_t a = 0; a < images2.size(); ++a) {
            const auto d = fv.image_hat(unit, fv.angles2()[a]);
            const auto& f = images2[a];
            for (std::size_t k = 0; k < s; ++k) j.s2[p][k] += w2 * 2.0 * (std::conj(f[k]) * d[k]).real();
            for (std::size_t k1 = 0; k1 < s; ++k1)
                for (std::size_t k2 = 0; k2 < s; ++k2) {
                    const std::size_t k3 = fv.closing(k1, k2);
                    j.s3pair[p][k1 * s + k2] += w2 * g0[k2] * (d[k1] * f[k3] + f[k1] * d[k3]);
                }
        }

        const double w3 = c / static_cast<double>(images3.size());
        for (std::size_t b = 0; b < images3.size(); ++b) {
            const auto d = fv.image_hat(unit, fv.angles3()[b]);
            const auto& f = images3[b];
            for (std::size_t k1 = 0; k1 < s; ++k1)
                for (std::size_t k2 = 0; k2 < s; ++k2) {
                    const std::size_t k3 = fv.closing(k1, k2);
                    j.s3[p][k1 * s + k2] += w3 * (d[k1] * f[k2] * f[k3] + f[k1] * d[k2] * f[k3] + f[k1] * f[k2] * d[k3]);
                }
        }

        if (!is_dc[p]) continue;
        const auto db = fv.basis_hat(p);
        j.s1[p] = c * db[0].real();
        for (std::size_t k = 0; k < s; ++k) j.s2pair[p][k] = c * 2.0 * (std::conj(g0[k]) * db[k]).real();
        for (std::size_t k1 = 0; k1 < s; ++k1)
            for (std::size_t k2 = 0; k2 < s; ++k2) {
                const std::size_t k3 = fv.closing(k1, k2);
                j.s3pair[p][k1 * s + k2] += c * db[k2] * q[k1 * s + k2];
                j.s3trip[p][k1 * s + k2] =
                    c * (db[k1] * g0[k2] * g0[k3] + g0[k1] * db[k2] * g0[k3] + g0[k1] * g0[k2] * db[k3]);
            }
    }
    return j;
}

std::vector<double> moments_vjp(const FreqVectors& fv, std::span<const double> params, const SpatialCotangents& w) {
    const std::size_t s = fv.lattice_size();
    const std::size_t np = params.size();
    const double c = fv.normalization();
    const int d2[2] = {fv.length(), fv.length()};
    const int d4[4] = {fv.length(), fv.length(), fv.length(), fv.length()};

    const auto g0 = fv.dc_hat(params);
    std::vector<Complex> bar0(s); // cotangent of the rotational average's transform
    std::vector<double> grad(np, 0.0);

    const bool need2 = !w.s2.empty() || !w.s3pair.empty();
    const auto images2 = need2 ? rotated_images(fv, params, fv.angles2()) : std::vector<std::vector<Complex>>{};
    std::vector<std::vector<Complex>> bar2(images2.size(), std::vector<Complex>(s));
    const double inv2 = images2.empty() ? 0.0 : 1.0 / static_cast<double>(images2.size());

    if (!w.s2.empty()) {
        const auto h = cotangent_hat(w.s2, d2);
        for (std::size_t a = 0; a < images2.size(); ++a)
            for (std::size_t k = 0; k < s; ++k) bar2[a][k] += 2.0 * c * inv2 * h[k].real() * std::conj(images2[a][k]);
    }
    if (!w.s2pair.empty()) {
        const auto h = cotangent_hat(w.s2pair, d2);
        for (std::size_t k = 0; k < s; ++k) bar0[k] += 2.0 * c * h[k].real() * std::conj(g0[k]);
    }
    if (!w.s3pair.empty()) {
        const auto h = cotangent_hat(w.s3pair, d4);
        const auto q = pair_factor(fv, images2);
        for (std::size_t k1 = 0; k1 < s; ++k1)
            for (std::size_t k2 = 0; k2 < s; ++k2) bar0[k2] += c * h[k1 * s + k2] * q[k1 * s + k2];
        for (std::size_t a = 0; a < images2.size(); ++a) {
            const auto& f = images2[a];
            auto& bar = bar2[a];
            for (std::size_t k1 = 0; k1 < s; ++k1)
                for (std::size_t k2 = 0; k2 < s; ++k2) {
                    const std::size_t k3 = fv.closing(k1, k2);
                    const Complex t = c * inv2 * h[k1 * s + k2] * g0[k2];
                    bar[k1] += t * f[k3];
                    bar[k3] += t * f[k1];
                }
        }
    }
    if (!w.s3trip.empty()) {
        const auto h = cotangent_hat(w.s3trip, d4);
        for (std::size_t k1 = 0; k1 < s; ++k1)
            for (std::size_t k2 = 0; k2 < s; ++k2) {
                const std::size_t k3 = fv.closing(k1, k2);
                const Complex t = c * h[k1 * s + k2];
                bar0[k1] += t * g0[k2] * g0[k3];
                bar0[k2] += t * g0[k1] * g0[k3];
                bar0[k3] += t * g0[k1] * g0[k2];
            }
    }

    auto pull_back = [&](const std::vector<Complex>& bar, double phi) {
        std::vector<double> g(np, 0.0);
        for (std::size_t p = 0; p < np; ++p) {
            const auto b = fv.basis_hat(p);
            double acc = 0.0;
            for (std::size_t k = 0; k < s; ++k) acc += (bar[k] * b[k]).real();
            g[p] = acc;
        }
        const auto back = steer_params(fv.spec(), g, -phi);
        for (std::size_t p = 0; p < np; ++p) grad[p] += back[p];
    };

    for (std::size_t a = 0; a < images2.size(); ++a) pull_back(bar2[a], fv.angles2()[a]);

    if (!w.s3.empty()) {
        const auto h = cotangent_hat(w.s3, d4);
        const auto images3 = rotated_images(fv, params, fv.angles3());
        const double inv3 = 1.0 / static_cast<double>(images3.size());
        for (std::size_t b = 0; b < images3.size(); ++b) {
            const auto& f = images3[b];
            std::vector<Complex> bar(s);
            for (std::size_t k1 = 0; k1 < s; ++k1)
                for (std::size_t k2 = 0; k2 < s; ++k2) {
                    const std::size_t k3 = fv.closing(k1, k2);
                    const Complex t = c * inv3 * h[k1 * s + k2];
                    bar[k1] += t * f[k2] * f[k3];
                    bar[k2] += t * f[k1] * f[k3];
                    bar[k3] += t * f[k1] * f[k2];
                }
            pull_back(bar, fv.angles3()[b]);
        }
    }

    for (std::size_t p : fv.dc_params()) {
        const auto b = fv.basis_hat(p);
        double acc = 0.0;
        for (std::size_t k = 0; k < s; ++k) acc += (bar0[k] * b[k]).real();
        grad[p] += acc + w.s1 * c * b[0].real();
    }
    return grad;
}

} // namespace mtd
