#include "mtd/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "mtd/error.hpp"
#include "mtd/rng.hpp"

namespace mtd {

ObjectiveWeights ObjectiveWeights::for_radius(double radius) {
    const double n2 = 4.0 * radius * radius;
    return {0.5, 0.5 / n2, 0.5 / (n2 * n2)};
}

Objective::Objective(const FreqVectors& fv, const MomentSet& targets, const SeparationFunctions& sep, double sigma)
    : Objective(fv, targets, sep, sigma, ObjectiveWeights::for_radius(fv.spec().radius())) {}

Objective::Objective(const FreqVectors& fv, const MomentSet& targets, const SeparationFunctions& sep, double sigma,
                     ObjectiveWeights weights)
    : model_(fv, sep, sigma), targets_(targets), weights_(weights) {
    if (targets.extent != model_.extent() || targets.a2.size() != targets.shift_count() ||
        targets.a3.size() != targets.shift_count() * targets.shift_count())
        throw ConfigError("target moments do not match the basis shift window");
}

double Objective::residual_value(const ForwardPrediction& pred, ForwardPrediction* cot) const {
    const double r1 = pred.a1 - targets_.a1;
    double s2 = 0.0, s3 = 0.0;
    if (cot) {
        cot->extent = pred.extent;
        cot->a2.resize(pred.a2.size());
        cot->a3.resize(pred.a3.size());
        cot->a1 = 2.0 * weights_.w1 * r1;
    }
    for (std::size_t i = 0; i < pred.a2.size(); ++i) {
        const double r = pred.a2[i] - targets_.a2[i];
        s2 += r * r;
        if (cot) cot->a2[i] = 2.0 * weights_.w2 * r;
    }
    for (std::size_t i = 0; i < pred.a3.size(); ++i) {
        const double r = pred.a3[i] - targets_.a3[i];
        s3 += r * r;
        if (cot) cot->a3[i] = 2.0 * weights_.w3 * r;
    }
    const double v = weights_.w1 * r1 * r1 + weights_.w2 * s2 + weights_.w3 * s3;
    if (!std::isfinite(v)) throw NumericalError("objective is not finite");
    return v;
}

double Objective::value(std::span<const double> x) const {
    const auto params = x.first(x.size() - 1);
    return residual_value(model_.predict(params, x.back()), nullptr);
}

double Objective::value_grad(std::span<const double> x, std::vector<double>& grad) const {
    const auto params = x.first(x.size() - 1);
    ForwardPrediction cot;
    const double v = residual_value(model_.predict(params, x.back()), &cot);
    const auto g = model_.vjp(params, x.back(), cot);
    grad.assign(g.params.begin(), g.params.end());
    grad.push_back(g.gamma);
    for (double d : grad)
        if (!std::isfinite(d)) throw NumericalError("objective gradient is not finite");
    return v;
}

ValueGrad objective_value_grad(const Objective& obj, std::span<const double> params, double gamma) {
    std::vector<double> x(params.begin(), params.end());
    x.push_back(gamma);
    ValueGrad out;
    out.value = obj.value_grad(x, out.grad);
    return out;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

} // namespace

MinimizeResult minimize(const Objective& obj, std::span<const double> x0, const MinimizeOptions& opts,
                        const IterationCallback& callback) {
    const std::size_t dim = x0.size();
    if (dim != obj.dimension()) throw ConfigError("initial point has the wrong dimension");
    for (double v : x0)
        if (!std::isfinite(v)) throw ConfigError("initial point is not finite");

    MinimizeResult res;
    res.x.assign(x0.begin(), x0.end());
    std::vector<double> g;
    res.value = obj.value_grad(res.x, g);
    res.gamma_trace.push_back(res.x.back());

    // Inverse Hessian approximation, row-major; starts as a scaled identity
    // once the first curvature pair is known.
    std::vector<double> H(dim * dim, 0.0);
    auto reset = [&](double scale) {
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i) H[i * dim + i] = scale;
    };
    reset(1.0);
    bool fresh = true;

    std::vector<double> d(dim), x_new(dim), g_new, s(dim), y(dim), hy(dim);
    constexpr double armijo = 1e-4;
    constexpr int max_halvings = 60;

    while (res.iterations < opts.max_iters) {
        if (max_abs(g) < opts.grad_tol || res.value == 0.0) {
            res.converged = true;
            break;
        }
        for (std::size_t i = 0; i < dim; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim; ++j) acc -= H[i * dim + j] * g[j];
            d[i] = acc;
        }
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            reset(1.0);
            fresh = true;
            for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
            slope = dot(g, d);
        }
        // Without curvature information the raw gradient has no useful
        // scale: aim the first trial step at 1% of |x|.
        double t = 1.0;
        if (fresh) {
            const double xn = std::sqrt(dot(res.x, res.x));
            t = 1e-2 * std::max(xn, 1.0) / std::sqrt(dot(d, d));
        }

        bool accepted = false;
        double f_new = 0.0;
        for (int h = 0; h <= max_halvings; ++h, t *= 0.5) {
            for (std::size_t i = 0; i < dim; ++i) x_new[i] = res.x[i] + t * d[i];
            try {
                f_new = obj.value(x_new);
            } catch (const NumericalError&) {
                continue;
            }
            if (f_new <= res.value + armijo * t * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!fresh) {
                // Retry once along the steepest descent direction.
                reset(1.0);
                fresh = true;
                continue;
            }
            res.degraded = true;
            break;
        }

        f_new = obj.value_grad(x_new, g_new);
        for (std::size_t i = 0; i < dim; ++i) {
            s[i] = x_new[i] - res.x[i];
            y[i] = g_new[i] - g[i];
        }
        const double decrease = res.value - f_new;
        res.x = x_new;
        g = g_new;
        res.value = f_new;
        ++res.iterations;
        res.gamma_trace.push_back(res.x.back());

        const double sy = dot(s, y);
        if (sy > 1e-300 * std::max(1.0, dot(s, s))) {
            if (fresh) {
                reset(sy / dot(y, y));
                fresh = false;
            }
            for (std::size_t i = 0; i < dim; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < dim; ++j) acc += H[i * dim + j] * y[j];
                hy[i] = acc;
            }
            const double yhy = dot(y, hy);
            const double rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j < dim; ++j)
                    H[i * dim + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        } else {
            reset(1.0);
            fresh = true;
        }

        if (callback && callback(IterationInfo{res.iterations, res.x, res.value})) {
            res.stopped_by_callback = true;
            break;
        }
        if (decrease <= opts.f_tol * std::abs(res.value)) {
            res.converged = true;
            break;
        }
    }
    return res;
}

namespace {

RecoveryResult from_minimize(const MinimizeResult& m) {
    RecoveryResult r;
    r.params.assign(m.x.begin(), m.x.end() - 1);
    r.gamma = m.x.back();
    r.objective = m.value;
    r.iterations = m.iterations;
    r.converged = m.converged;
    r.degraded = m.degraded;
    return r;
}

std::vector<double> pack(std::span<const double> params, double gamma) {
    std::vector<double> x(params.begin(), params.end());
    x.push_back(gamma);
    return x;
}

} // namespace

RecoveryResult solve_fixed(const FreqVectors& fv, const MomentSet& targets, double sigma,
                           const SeparationFunctions& sep, std::span<const double> params0, double gamma0,
                           const MinimizeOptions& opts) {
    const Objective obj(fv, targets, sep, sigma);
    const auto m = minimize(obj, pack(params0, gamma0), opts);
    RecoveryResult r = from_minimize(m);
    r.gamma_trace_stage1 = m.gamma_trace;
    return r;
}

RecoveryResult algorithm1(const FreqVectors& fv, const MomentSet& targets, double sigma,
                          std::span<const double> params0, const Algorithm1Options& opts) {
    const double n = fv.spec().radius();
    if (!(opts.gamma_init > 0.0) || opts.gamma_init > opts.gamma_max)
        throw ConfigError("initial density must lie in (0, gamma_max]");
    if (opts.stabilize_window < 1) throw ConfigError("stabilization window must be positive");

    const auto sep1 = approximate_separation(opts.gamma_init, opts.surrogate_size, n, opts.surrogate_seed);
    const Objective stage1(fv, targets, sep1, sigma);
    bool left_range = false;
    const auto window = static_cast<std::size_t>(opts.stabilize_window);
    std::vector<double> trace{opts.gamma_init};
    auto watch = [&](const IterationInfo& info) {
        const double g = info.x.back();
        trace.push_back(g);
        if (!(g > 0.0) || g > opts.gamma_max) {
            left_range = true;
            return true;
        }
        if (trace.size() <= window) return false;
        const double before = trace[trace.size() - 1 - window];
        return std::abs(g - before) < opts.stabilize_tol * std::abs(g);
    };
    const auto m1 = minimize(stage1, pack(params0, opts.gamma_init), opts.stage1, watch);

    RecoveryResult r = from_minimize(m1);
    r.gamma_trace_stage1 = m1.gamma_trace;
    const double g1 = m1.x.back();
    if (left_range || !(g1 > 0.0) || g1 > opts.gamma_max) {
        r.failed = true;
        r.message = "stage 1 density left (0, " + std::to_string(opts.gamma_max) + "]";
        return r;
    }

    const auto sep2 = approximate_separation(g1, opts.surrogate_size, n, opts.surrogate_seed);
    const Objective stage2(fv, targets, sep2, sigma);
    const auto m2 = minimize(stage2, m1.x, opts.stage2);
    RecoveryResult out = from_minimize(m2);
    out.iterations += m1.iterations;
    out.degraded = out.degraded || m1.degraded;
    out.gamma_trace_stage1 = m1.gamma_trace;
    out.gamma_trace_stage2 = m2.gamma_trace;
    return out;
}

std::vector<double> random_start(const FreqVectors& fv, const MomentSet& targets, double sigma, double gamma,
                                 std::uint64_t seed) {
    const std::size_t count = fv.spec().param_count();
    const CounterRng rng(seed, 0x5eed);
    std::vector<double> params(count);
    for (std::size_t i = 0; i < count; i += 2) {
        double z0 = 0.0, z1 = 0.0;
        rng.normal_pair(i / 2, z0, z1);
        params[i] = z0;
        if (i + 1 < count) params[i + 1] = z1;
    }
    const double target = targets.a2.empty() ? 0.0 : targets.a2[0] - sigma * sigma;
    const double rate = occupancy_rate(gamma);
    if (!(target > 0.0) || !(rate > 0.0)) return params;
    // S2[0] (rotationally averaged) is the mean of its transform over the lattice.
    const auto hat = s2_hat(fv, params);
    double s2_zero = 0.0;
    for (const auto& v : hat) s2_zero += v.real();
    s2_zero /= static_cast<double>(fv.lattice_size());
    if (!(s2_zero > 0.0)) return params;
    const double scale = std::sqrt(target / (rate * s2_zero));
    for (double& v : params) v *= scale;
    return params;
}

RecoveryResult multi_start(const std::function<RecoveryResult(std::uint64_t seed)>& solve,
                           std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw ConfigError("multi-start needs at least one seed");
    std::vector<RecoveryResult> results(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    const std::size_t workers =
        std::min<std::size_t>(seeds.size(), std::max(1u, std::thread::hardware_concurrency()));
    auto run = [&](std::size_t first) {
        for (std::size_t i = first; i < seeds.size(); i += workers) {
            try {
                results[i] = solve(seeds[i]);
                results[i].start_seed = seeds[i];
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Seed order breaks ties, so the selection does not depend on scheduling.
    std::size_t best = 0;
    auto better = [](const RecoveryResult& a, const RecoveryResult& b) {
        if (a.failed != b.failed) return !a.failed;
        return a.objective < b.objective;
    };
    for (std::size_t i = 1; i < results.size(); ++i)
        if (better(results[i], results[best])) best = i;
    return results[best];
}

Alignment relative_error_alpha(const BasisSpec& spec, const CoefficientVector& truth,
                               const CoefficientVector& estimate) {
    const auto& idx = spec.indices();
    if (truth.values.size() != idx.size() || estimate.values.size() != idx.size())
        throw ConfigError("coefficient vectors do not match the basis");
    double tn = 0.0, en = 0.0;
    for (const auto& v : truth.values) tn += std::norm(v);
    for (const auto& v : estimate.values) en += std::norm(v);
    if (tn == 0.0) throw ConfigError("reference coefficients are zero");

    // ||a - steer(b, phi)||^2 = |a|^2 + |b|^2 - 2 Re sum conj(a) b e^{i nu phi}
    std::vector<Complex> cross(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) cross[i] = std::conj(truth.values[i]) * estimate.values[i];
    auto dist2 = [&](double phi) {
        double re = 0.0;
        for (std::size_t i = 0; i < idx.size(); ++i) re += (cross[i] * std::polar(1.0, idx[i].nu * phi)).real();
        return std::max(0.0, tn + en - 2.0 * re);
    };

    constexpr int grid = 1024;
    const double step = 2.0 * std::numbers::pi / grid;
    int best = 0;
    double best_val = dist2(0.0);
    for (int k = 1; k < grid; ++k) {
        const double v = dist2(k * step);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = (best - 1) * step, b = (best + 1) * step;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = dist2(c), fd = dist2(d);
    for (int it = 0; it < 100 && b - a > 1e-14; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = dist2(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = dist2(d);
        }
    }
    double phi = 0.5 * (a + b);
    if (best_val < dist2(phi)) phi = best * step;

    // The squared distance above loses precision to cancellation near a
    // perfect match; polish phi with Newton steps on the derivative of the
    // cross term, then measure the distance directly.
    for (int it = 0; it < 5; ++it) {
        double d1 = 0.0, d2 = 0.0;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const Complex z = cross[i] * std::polar(1.0, idx[i].nu * phi);
            const double nu = idx[i].nu;
            d1 -= nu * z.imag();
            d2 -= nu * nu * z.real();
        }
        if (!(d2 < 0.0)) break;
        const double next = phi - d1 / d2;
        if (std::abs(next - phi) > step) break;
        phi = next;
    }
    auto direct = [&](double angle) {
        double acc = 0.0;
        for (std::size_t i = 0; i < idx.size(); ++i)
            acc += std::norm(truth.values[i] - estimate.values[i] * std::polar(1.0, idx[i].nu * angle));
        return acc;
    };
    double val = direct(phi);
    if (const double g = direct(best * step); g < val) {
        val = g;
        phi = best * step;
    }
    phi = std::remainder(phi, 2.0 * std::numbers::pi);
    return {std::sqrt(val / tn), phi};
}

double relative_error_gamma(double truth, double estimate) {
    if (truth == 0.0) throw ConfigError("reference density is zero");
    return std::abs(truth - estimate) / std::abs(truth);
}

} // namespace mtd
