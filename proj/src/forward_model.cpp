#include "mtd/forward_model.hpp"

#include <cmath>
#include <numbers>

#include "mtd/error.hpp"
#include "mtd/measurement.hpp"

namespace mtd {
namespace {

// Offsets whose every coordinate can land inside (-L/2, L/2) after adding a
// shift from {0, ..., m-1}.
bool reachable(int e, int m, int half) { return e > -half - (m - 1) && e < half; }

ForwardPrediction zero_prediction(int m) {
    ForwardPrediction p;
    p.extent = m;
    const auto s = static_cast<std::size_t>(m * m);
    p.a2.assign(s, 0.0);
    p.a3.assign(s * s, 0.0);
    return p;
}

// Index helper for the cyclic moment lattice.
struct Lattice {
    int len;
    int half;
    long at(int y, int x) const {
        if (y <= -half || y >= half || x <= -half || x >= half) return -1;
        return static_cast<long>(((y + len) % len) * len + (x + len) % len);
    }
    std::size_t size() const { return static_cast<std::size_t>(len * len); }
};

} // namespace

ForwardModel::ForwardModel(const FreqVectors& fv, const SeparationFunctions& sep, double sigma)
    : fv_(&fv), sigma_(sigma), extent_(fv.spec().shift_extent()) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("noise level must be finite and >= 0");
    if (sep.radius != fv.spec().radius() || sep.half_width != fv.spec().neighbor_extent())
        throw ConfigError("separation functions were computed for a different image radius");
    const int m = extent_;
    const int half = fv.length() / 2;
    const int w = sep.half_width;
    const double p = static_cast<double>(sep.count);
    for (int dy = -w; dy <= w; ++dy)
        for (int dx = -w; dx <= w; ++dx) {
            const double x = sep.xi_at(dy, dx);
            if (x != 0.0) pair_.push_back({dy, dx, x});
        }
    for (int a = -w; a <= w; ++a) {
        if (!reachable(a, m, half)) continue;
        for (int b = -w; b <= w; ++b) {
            if (!reachable(b, m, half)) continue;
            for (int c = -w; c <= w; ++c) {
                if (!reachable(c, m, half)) continue;
                for (int d = -w; d <= w; ++d) {
                    if (!reachable(d, m, half)) continue;
                    double z = p * sep.zeta_at(a, b, c, d);
                    if (a == c && b == d) z -= sep.xi_at(a, b);
                    if (std::abs(z) > 1e-15) trip_.push_back({a, b, c, d, z});
                }
            }
        }
    }
}

ForwardPrediction ForwardModel::assemble(const SpatialMoments& s, double rate, bool with_noise) const {
    const int m = extent_;
    const auto sm = static_cast<std::size_t>(m * m);
    const Lattice lat{s.length, s.length / 2};
    const std::size_t ls = lat.size();
    const double var = sigma_ * sigma_;
    ForwardPrediction out = zero_prediction(m);
    out.a1 = rate * s.s1;

    auto s2 = [&](const std::vector<double>& t, int y, int x) {
        const long i = lat.at(y, x);
        return i < 0 ? 0.0 : t[static_cast<std::size_t>(i)];
    };
    auto s3 = [&](const std::vector<double>& t, int y1, int x1, int y2, int x2) {
        const long i = lat.at(y1, x1), j = lat.at(y2, x2);
        return (i < 0 || j < 0) ? 0.0 : t[static_cast<std::size_t>(i) * ls + static_cast<std::size_t>(j)];
    };

    for (int i = 0; i < m * m; ++i) {
        const int y = i / m, x = i % m;
        double v = s2(s.s2, y, x);
        for (const auto& t : pair_) v += t.w * s2(s.s2pair, t.dy - y, t.dx - x);
        out.a2[static_cast<std::size_t>(i)] = rate * v;
    }
    if (with_noise) out.a2[0] += var;

    for (int i1 = 0; i1 < m * m; ++i1) {
        const int y1 = i1 / m, x1 = i1 % m;
        for (int i2 = 0; i2 < m * m; ++i2) {
            const int y2 = i2 / m, x2 = i2 % m;
            double v = s3(s.s3, y1, x1, y2, x2);
            for (const auto& t : pair_) {
                v += t.w * (s3(s.s3pair, y2 - y1, x2 - x1, t.dy - y1, t.dx - x1) +
                            s3(s.s3pair, y2, x2, y1 - t.dy, x1 - t.dx) +
                            s3(s.s3pair, y1, x1, y2 - t.dy, x2 - t.dx));
            }
            const int spikes = (i1 == 0) + (i2 == 0) + (i1 == i2);
            v += s.s1 * var * spikes;
            out.a3[static_cast<std::size_t>(i1) * sm + static_cast<std::size_t>(i2)] = rate * v;
        }
    }
    for (const auto& t : trip_) {
        for (int y1 = 0; y1 < m; ++y1) {
            const int u = y1 + t.e1y;
            if (u <= -lat.half || u >= lat.half) continue;
            for (int x1 = 0; x1 < m; ++x1) {
                const long a = lat.at(u, x1 + t.e1x);
                if (a < 0) continue;
                for (int y2 = 0; y2 < m; ++y2) {
                    const int v = y2 + t.e2y;
                    if (v <= -lat.half || v >= lat.half) continue;
                    for (int x2 = 0; x2 < m; ++x2) {
                        const long b = lat.at(v, x2 + t.e2x);
                        if (b < 0) continue;
                        out.a3[static_cast<std::size_t>(y1 * m + x1) * sm + static_cast<std::size_t>(y2 * m + x2)] +=
                            rate * t.w * s.s3trip[static_cast<std::size_t>(a) * ls + static_cast<std::size_t>(b)];
                    }
                }
            }
        }
    }
    return out;
}

ForwardPrediction ForwardModel::predict(std::span<const double> params, double gamma) const {
    const auto s = to_spatial(image_moments(*fv_, params));
    return assemble(s, occupancy_rate(gamma), true);
}

ForwardModel::Gradient ForwardModel::vjp(std::span<const double> params, double gamma,
                                         const ForwardPrediction& c) const {
    const int m = extent_;
    const auto sm = static_cast<std::size_t>(m * m);
    const int len = fv_->length();
    const Lattice lat{len, len / 2};
    const std::size_t ls = lat.size();
    const double var = sigma_ * sigma_;

    // Cotangents of the unscaled moment part; the rate multiplies at the end.
    SpatialCotangents w;
    w.s2.assign(ls, 0.0);
    w.s2pair.assign(ls, 0.0);
    w.s3.assign(ls * ls, 0.0);
    w.s3pair.assign(ls * ls, 0.0);
    w.s3trip.assign(ls * ls, 0.0);
    w.s1 = c.a1;

    auto add2 = [&](std::vector<double>& t, int y, int x, double v) {
        const long i = lat.at(y, x);
        if (i >= 0) t[static_cast<std::size_t>(i)] += v;
    };
    auto add3 = [&](std::vector<double>& t, int y1, int x1, int y2, int x2, double v) {
        const long i = lat.at(y1, x1), j = lat.at(y2, x2);
        if (i >= 0 && j >= 0) t[static_cast<std::size_t>(i) * ls + static_cast<std::size_t>(j)] += v;
    };

    for (int i = 0; i < m * m; ++i) {
        const int y = i / m, x = i % m;
        const double g = c.a2[static_cast<std::size_t>(i)];
        if (g == 0.0) continue;
        add2(w.s2, y, x, g);
        for (const auto& t : pair_) add2(w.s2pair, t.dy - y, t.dx - x, g * t.w);
    }
    for (int i1 = 0; i1 < m * m; ++i1) {
        const int y1 = i1 / m, x1 = i1 % m;
        for (int i2 = 0; i2 < m * m; ++i2) {
            const int y2 = i2 / m, x2 = i2 % m;
            const double g = c.a3[static_cast<std::size_t>(i1) * sm + static_cast<std::size_t>(i2)];
            if (g == 0.0) continue;
            add3(w.s3, y1, x1, y2, x2, g);
            for (const auto& t : pair_) {
                const double gw = g * t.w;
                add3(w.s3pair, y2 - y1, x2 - x1, t.dy - y1, t.dx - x1, gw);
                add3(w.s3pair, y2, x2, y1 - t.dy, x1 - t.dx, gw);
                add3(w.s3pair, y1, x1, y2 - t.dy, x2 - t.dx, gw);
            }
            w.s1 += g * var * ((i1 == 0) + (i2 == 0) + (i1 == i2));
        }
    }
    for (const auto& t : trip_) {
        for (int y1 = 0; y1 < m; ++y1) {
            const int u = y1 + t.e1y;
            if (u <= -lat.half || u >= lat.half) continue;
            for (int x1 = 0; x1 < m; ++x1) {
                const long a = lat.at(u, x1 + t.e1x);
                if (a < 0) continue;
                for (int y2 = 0; y2 < m; ++y2) {
                    const int v = y2 + t.e2y;
                    if (v <= -lat.half || v >= lat.half) continue;
                    for (int x2 = 0; x2 < m; ++x2) {
                        const long b = lat.at(v, x2 + t.e2x);
                        if (b < 0) continue;
                        w.s3trip[static_cast<std::size_t>(a) * ls + static_cast<std::size_t>(b)] +=
                            t.w * c.a3[static_cast<std::size_t>(y1 * m + x1) * sm + static_cast<std::size_t>(y2 * m + x2)];
                    }
                }
            }
        }
    }

    // d/dgamma: the moment part contracted with the cotangents, times 4/pi.
    const auto s = to_spatial(image_moments(*fv_, params));
    double contracted = w.s1 * s.s1;
    for (std::size_t i = 0; i < ls; ++i) contracted += w.s2[i] * s.s2[i] + w.s2pair[i] * s.s2pair[i];
    for (std::size_t i = 0; i < ls * ls; ++i)
        contracted += w.s3[i] * s.s3[i] + w.s3pair[i] * s.s3pair[i] + w.s3trip[i] * s.s3trip[i];

    const double rate = occupancy_rate(gamma);
    Gradient g;
    g.gamma = occupancy_rate(1.0) * contracted;
    g.params = moments_vjp(*fv_, params, w);
    for (double& v : g.params) v *= rate;
    return g;
}

ForwardModel::Jacobian ForwardModel::jacobian(std::span<const double> params, double gamma) const {
    const auto jm = grad_moments(*fv_, params);
    const double rate = occupancy_rate(gamma);
    Jacobian j;
    for (std::size_t p = 0; p < params.size(); ++p) {
        ImageMoments col;
        col.length = fv_->length();
        col.s1 = jm.s1[p];
        col.s2 = jm.s2[p];
        col.s2pair = jm.s2pair[p];
        col.s3 = jm.s3[p];
        col.s3pair = jm.s3pair[p];
        col.s3trip = jm.s3trip[p];
        j.params.push_back(assemble(to_spatial(col), rate, false));
    }
    j.gamma = assemble(to_spatial(image_moments(*fv_, params)), occupancy_rate(1.0), false);
    return j;
}

ForwardPrediction predict_ac(const FreqVectors& fv, std::span<const double> params, double gamma, double sigma,
                             const SeparationFunctions& sep) {
    return ForwardModel(fv, sep, sigma).predict(params, gamma);
}

} // namespace mtd
