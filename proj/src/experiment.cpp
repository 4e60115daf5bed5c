#include "mtd/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mtd/error.hpp"
#include "mtd/rng.hpp"

namespace mtd {

std::string_view case_name(SeparationCase c) {
    switch (c) {
    case SeparationCase::Known: return "known";
    case SeparationCase::Approximated: return "approx";
    case SeparationCase::Ignored: return "ignored";
    }
    return "?";
}

SeparationCase parse_case(std::string_view name) {
    if (name == "known") return SeparationCase::Known;
    if (name == "approx") return SeparationCase::Approximated;
    if (name == "ignored") return SeparationCase::Ignored;
    throw ConfigError("unknown separation case '" + std::string(name) + "' (known | approx | ignored)");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return CounterRng(base, a).bits(b);
}

CoefficientVector draw_truth(const BasisSpec& spec, std::uint64_t seed) {
    const CounterRng rng(seed, 1);
    std::vector<double> params(spec.param_count());
    for (std::size_t i = 0; i < params.size(); i += 2) {
        double z0 = 0.0, z1 = 0.0;
        rng.normal_pair(i / 2, z0, z1);
        params[i] = z0;
        if (i + 1 < params.size()) params[i + 1] = z1;
    }
    return from_params(spec, params);
}

TrialData simulate_trial(const BasisTables& tables, const TrialSpec& spec) {
    if (spec.measurements < 1) throw ConfigError("a trial needs at least one measurement");
    const auto& bs = tables.spec();
    const double n = bs.radius();
    TrialData d;
    d.truth = draw_truth(bs, spec.seed);
    d.sigma = std::isinf(spec.snr) ? 0.0 : snr_to_sigma(tables, d.truth, spec.snr);
    const std::size_t count = density_to_count(spec.gamma, spec.grid_size, n);
    d.gamma_true = count_to_density(count, spec.grid_size, n);

    MomentAccumulator acc;
    std::vector<SeparationFunctions> seps;
    for (int k = 0; k < spec.measurements; ++k) {
        const auto ks = static_cast<std::uint64_t>(k);
        const auto locs = place_occurrences(spec.grid_size, n, {spec.spacing, count}, derive_seed(spec.seed, 2, ks));
        const auto m = render_measurement(spec.grid_size, tables, d.truth, locs, d.sigma, derive_seed(spec.seed, 3, ks));
        acc.add(empirical_ac(m, spec.method));
        seps.push_back(separation_functions(locs, n));
    }
    d.moments = acc.mean();
    d.known = average_separation(seps);
    return d;
}

TrialOutcome solve_trial(const FreqVectors& fv, const TrialData& data, const SolveSpec& spec) {
    if (spec.starts < 1) throw ConfigError("at least one start is required");
    const auto t0 = std::chrono::steady_clock::now();
    const auto& bs = fv.spec();
    const SeparationFunctions ignored = empty_separation(bs.radius());
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < spec.starts; ++s) seeds.push_back(derive_seed(spec.seed, 4, static_cast<std::uint64_t>(s)));

    auto solve = [&](std::uint64_t seed) {
        const auto init = random_start(fv, data.moments, data.sigma, spec.gamma_init, seed);
        switch (spec.which) {
        case SeparationCase::Known:
            return solve_fixed(fv, data.moments, data.sigma, data.known, init, spec.gamma_init, spec.options);
        case SeparationCase::Ignored:
            return solve_fixed(fv, data.moments, data.sigma, ignored, init, spec.gamma_init, spec.options);
        case SeparationCase::Approximated: {
            Algorithm1Options o;
            o.gamma_init = spec.gamma_init;
            o.surrogate_size = spec.surrogate_size ? spec.surrogate_size : data.moments.grid_size;
            o.surrogate_seed = derive_seed(spec.seed, 5);
            o.stage1 = spec.options;
            o.stage2 = spec.options;
            return algorithm1(fv, data.moments, data.sigma, init, o);
        }
        }
        throw ConfigError("unknown separation case");
    };

    TrialOutcome out;
    out.result = multi_start(solve, seeds);
    const auto align = relative_error_alpha(bs, data.truth, from_params(bs, out.result.params));
    out.alpha_error = align.error;
    out.angle = align.angle;
    out.gamma_error = relative_error_gamma(data.gamma_true, out.result.gamma);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

SeparationFunctions average_separation(std::span<const SeparationFunctions> parts) {
    if (parts.empty()) throw ConfigError("nothing to average");
    SeparationFunctions out = parts.front();
    if (parts.size() == 1) return out;
    for (const auto& s : parts.subspan(1)) {
        if (s.radius != out.radius || s.count != out.count)
            throw ConfigError("separation functions disagree on radius or occurrence count");
        for (std::size_t i = 0; i < out.xi.size(); ++i) out.xi[i] += s.xi[i];
        for (std::size_t i = 0; i < out.zeta.size(); ++i) out.zeta[i] += s.zeta[i];
        out.xi_outside += s.xi_outside;
        out.zeta_outside += s.zeta_outside;
    }
    const double w = 1.0 / static_cast<double>(parts.size());
    for (double& v : out.xi) v *= w;
    for (double& v : out.zeta) v *= w;
    out.xi_outside *= w;
    out.zeta_outside *= w;
    return out;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs at least two matching points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NumericalError("slope fit needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw ConfigError("slope fit needs distinct abscissae");
    return sxy / sxx;
}

double median(std::vector<double> v) {
    if (v.empty()) throw ConfigError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

} // namespace mtd
