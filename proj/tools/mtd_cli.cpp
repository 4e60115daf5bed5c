// Command-line front end: simulate, moments, recover, experiment, ctf-demo.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "mtd/ctf.hpp"
#include "mtd/error.hpp"
#include "mtd/experiment.hpp"
#include "mtd/io.hpp"

namespace fs = std::filesystem;
using namespace mtd;
using io::Json;

namespace {

constexpr std::size_t desk_grid_limit = 8000;
constexpr int desk_trial_limit = 20;

struct BasisArgs {
    double n = 2.5;
    int coeffs = 10;
    void add(CLI::App* app) {
        app->add_option("--n", n, "image radius in pixels");
        app->add_option("--coeffs", coeffs, "number of Fourier-Bessel coefficients");
    }
    BasisSpec spec() const { return BasisSpec::with_coefficient_count(n, coeffs); }
    Json json() const { return {{"n", n}, {"coeffs", coeffs}}; }
};

double parse_snr(const std::string& s) {
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !(v > 0.0)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("SNR must be positive or 'inf', got '" + s + "'");
    }
}

Json snr_json(double snr) { return std::isinf(snr) ? Json("inf") : Json(snr); }

SpacingMode parse_spacing(const std::string& s) {
    if (s == "arbitrary") return SpacingMode::ArbitrarySpacing;
    if (s == "well") return SpacingMode::WellSeparated;
    throw ConfigError("spacing must be 'arbitrary' or 'well'");
}

AcMethod parse_method(const std::string& s) {
    if (s == "direct") return AcMethod::Direct;
    if (s == "fft") return AcMethod::Fft;
    throw ConfigError("moment method must be 'direct' or 'fft'");
}

void check_scale(std::size_t grid, int trials, bool paper_scale) {
    const bool big = grid > desk_grid_limit || trials > desk_trial_limit;
    if (big && !paper_scale)
        throw ConfigError("N > " + std::to_string(desk_grid_limit) + " or more than " +
                          std::to_string(desk_trial_limit) + " trials is paper scale; pass --paper-scale to run it");
    if (big) std::cerr << "warning: paper-scale configuration, expect hours of runtime\n";
}

// Values from a flat JSON object fill every option not given on the command line.
void apply_config(CLI::App* app, const std::string& path) {
    if (path.empty()) return;
    const Json cfg = io::read_json(path);
    if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config") continue;
        CLI::Option* opt = app->get_option_no_throw("--" + key);
        if (!opt) throw ConfigError("unknown config key '" + key + "' for " + app->get_name());
        if (opt->count() > 0) continue;
        std::vector<std::string> vals;
        auto text = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (value.is_array())
            for (const auto& v : value) vals.push_back(text(v));
        else
            vals.push_back(text(value));
        try {
            opt->add_result(vals);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
}

BasisTables load_tables(const BasisSpec& spec) { return io::cached_basis(spec, io::cache_dir_from_env()); }

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    BasisArgs basis;
    std::size_t grid = 1000;
    double gamma = 0.1;
    std::string snr = "inf";
    double sigma = -1.0;
    std::uint64_t seed = 0;
    std::string spacing = "arbitrary";
    int measurements = 1;
    std::string truth;
    std::string out;
    bool paper_scale = false;
    std::string config;
};

Json simulate_config(const SimulateArgs& a) {
    return {{"basis", a.basis.json()}, {"N", a.grid},         {"gamma", a.gamma},
            {"snr", a.snr},            {"sigma", a.sigma},    {"seed", a.seed},
            {"spacing", a.spacing},    {"measurements", a.measurements}};
}

int cmd_simulate(const SimulateArgs& a) {
    if (a.out.empty()) throw ConfigError("simulate needs --out");
    if (a.measurements < 1) throw ConfigError("--measurements must be at least 1");
    check_scale(a.grid, 1, a.paper_scale);
    const BasisTables tables = load_tables(a.basis.spec());
    const auto& spec = tables.spec();

    CoefficientVector truth;
    if (!a.truth.empty()) {
        truth = io::coefficients_from_json(spec, io::read_json(a.truth).at("truth"));
    } else {
        truth = draw_truth(spec, a.seed);
    }
    const double snr = parse_snr(a.snr);
    const double sigma = a.sigma >= 0.0 ? a.sigma : (std::isinf(snr) ? 0.0 : snr_to_sigma(tables, truth, snr));
    const std::size_t count = density_to_count(a.gamma, a.grid, spec.radius());

    const fs::path out(a.out);
    std::vector<fs::path> files;
    if (a.measurements == 1) {
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        files.push_back(out);
    } else {
        fs::create_directories(out);
        for (int k = 0; k < a.measurements; ++k) {
            std::ostringstream name;
            name << "m" << std::setw(4) << std::setfill('0') << k << ".bin";
            files.push_back(out / name.str());
        }
    }
    for (std::size_t k = 0; k < files.size(); ++k) {
        const auto locs =
            place_occurrences(a.grid, spec.radius(), {parse_spacing(a.spacing), count}, derive_seed(a.seed, 2, k));
        const auto m = render_measurement(a.grid, tables, truth, locs, sigma, derive_seed(a.seed, 3, k));
        io::save_measurement(files[k], m);
        Json manifest = {{"config", simulate_config(a)},
                         {"truth", io::coefficients_to_json(spec, truth)},
                         {"sigma", sigma},
                         {"count", count},
                         {"gamma_realized", count_to_density(count, a.grid, spec.radius())},
                         {"placements", io::placements_to_json(*m.placements)}};
        io::write_json(io::manifest_path(files[k]), manifest);
    }
    std::cout << "wrote " << files.size() << " measurement(s), " << count << " occurrences each, sigma = " << sigma
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- moments

struct MomentsArgs {
    std::vector<std::string> inputs;
    std::string out;
    std::string method = "direct";
    std::string config;
};

std::vector<fs::path> measurement_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file() && e.path().extension() == ".bin") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
        } else {
            throw ConfigError("no such measurement file or directory: " + in);
        }
    }
    if (files.empty()) throw ConfigError("no measurement files given");
    return files;
}

int cmd_moments(const MomentsArgs& a) {
    if (a.out.empty()) throw ConfigError("moments needs --out");
    const auto method = parse_method(a.method);
    MomentAccumulator acc;
    for (const auto& f : measurement_files(a.inputs)) acc.add(empirical_ac(io::load_measurement(f), method));
    const auto ms = acc.mean();
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    io::save_moments(a.out, ms, acc.count());
    std::cout << "averaged " << acc.count() << " measurement(s): N = " << ms.grid_size << ", m = " << ms.extent
              << ", a1 = " << ms.a1 << "\n";
    return 0;
}

// ---------------------------------------------------------------- recover

struct RecoverArgs {
    BasisArgs basis;
    std::string moments;
    double sigma = -1.0;
    std::vector<std::string> manifests;
    std::string which = "approx";
    double gamma_init = 0.09;
    int starts = 10;
    std::uint64_t seed = 0;
    std::size_t surrogate = 0;
    int max_iters = 500;
    std::string out;
    std::string config;
};

int cmd_recover(const RecoverArgs& a) {
    if (a.moments.empty() || a.out.empty()) throw ConfigError("recover needs --moments and --out");
    const auto ms = io::load_moments(a.moments);
    BasisArgs basis = a.basis;
    basis.n = ms.radius;
    const BasisTables tables = load_tables(basis.spec());
    const FreqVectors fv(tables);
    const auto& spec = tables.spec();
    const auto which = parse_case(a.which);

    std::vector<Json> manifests;
    for (const auto& m : a.manifests) manifests.push_back(io::read_json(m));
    double sigma = a.sigma;
    if (sigma < 0.0) {
        if (manifests.empty()) throw ConfigError("recover needs --sigma (or a manifest that records it)");
        sigma = manifests.front().at("sigma").get<double>();
    }

    TrialData data;
    data.moments = ms;
    data.sigma = sigma;
    data.known = empty_separation(spec.radius());
    std::optional<CoefficientVector> truth;
    if (!manifests.empty() && manifests.front().contains("truth")) {
        truth = io::coefficients_from_json(spec, manifests.front().at("truth"));
        data.gamma_true = manifests.front().value("gamma_realized", 0.0);
    }
    if (which == SeparationCase::Known) {
        if (manifests.empty()) throw ConfigError("the known case needs --manifest with the true placements");
        std::vector<SeparationFunctions> seps;
        for (const auto& m : manifests) {
            std::vector<Location> locs;
            for (const auto& p : io::placements_from_json(m)) locs.push_back(p.location);
            seps.push_back(separation_functions(locs, spec.radius()));
        }
        data.known = average_separation(seps);
    }

    SolveSpec ss;
    ss.which = which;
    ss.starts = a.starts;
    ss.gamma_init = a.gamma_init;
    ss.seed = a.seed;
    ss.surrogate_size = a.surrogate;
    ss.options.max_iters = a.max_iters;

    Json report = {{"config",
                    {{"basis", basis.json()},
                     {"moments", a.moments},
                     {"sigma", sigma},
                     {"case", a.which},
                     {"gamma_init", a.gamma_init},
                     {"starts", a.starts},
                     {"seed", a.seed},
                     {"surrogate_size", a.surrogate},
                     {"max_iters", a.max_iters}}}};

    RecoveryResult result;
    double phi = 0.0;
    if (truth) {
        data.truth = *truth;
        const auto outcome = solve_trial(fv, data, ss);
        result = outcome.result;
        phi = outcome.angle;
        report["metrics"] = {{"alpha_error", outcome.alpha_error}, {"alignment_angle", outcome.angle}};
        if (data.gamma_true > 0.0) report["metrics"]["gamma_error"] = outcome.gamma_error;
        std::cout << "relative error " << outcome.alpha_error << "\n";
    } else {
        // Without ground truth the error metric is skipped; the solve is the same.
        data.truth = from_params(spec, std::vector<double>(spec.param_count(), 1.0));
        result = solve_trial(fv, data, ss).result;
    }
    report["result"] = io::recovery_to_json(spec, result);

    const fs::path prefix(a.out);
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    io::write_json(prefix.string() + ".json", report);
    io::write_pgm(prefix.string() + ".pgm", synthesize_params(tables, result.params, phi));
    std::cout << "gamma " << result.gamma << ", objective " << result.objective << ", iterations " << result.iterations
              << (result.failed ? " (failed)" : "") << "\n";
    return result.failed ? 3 : 0;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
    BasisArgs basis;
    std::string kind = "size-sweep";
    std::vector<std::size_t> grids{1000, 2000, 4000};
    std::vector<std::string> snrs{"inf"};
    double gamma = 0.1;
    int trials = 10;
    int starts = 5;
    std::vector<std::string> cases{"known", "approx", "ignored"};
    std::uint64_t seed = 0;
    int measurements = 1;
    double gamma_init = 0.09;
    int max_iters = 500;
    int workers = 0;
    std::string method = "direct";
    std::string out;
    bool paper_scale = false;
    std::string config;
};

const char* const trial_columns =
    "experiment,case,N,snr,trial,seed,alpha_error,gamma_true,gamma_est,gamma_error,objective,iterations,"
    "converged,degraded,failed,seconds";
const char* const summary_columns =
    "experiment,case,N,snr,trials,ok_trials,median_alpha_error,mean_alpha_error,median_gamma_error";

struct TrialRow {
    std::string which;
    std::size_t grid = 0;
    double snr = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    TrialOutcome outcome;
    double gamma_true = 0.0;
    bool ok = false;
    std::string error;
};

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

int cmd_experiment(const ExperimentArgs& a) {
    if (a.out.empty()) throw ConfigError("experiment needs --out");
    if (a.grids.empty() || a.snrs.empty() || a.cases.empty()) throw ConfigError("sweep lists must be non-empty");
    if (a.trials < 1 || a.starts < 1) throw ConfigError("--trials and --starts must be positive");
    const std::vector<std::string> kinds{"size-sweep", "snr-sweep", "gamma", "recovery"};
    if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end())
        throw ConfigError("--kind must be size-sweep, snr-sweep, gamma or recovery");
    for (auto g : a.grids) check_scale(g, a.trials, a.paper_scale);
    std::vector<SeparationCase> cases;
    for (const auto& c : a.cases) cases.push_back(parse_case(c));
    std::vector<double> snrs;
    for (const auto& s : a.snrs) snrs.push_back(parse_snr(s));
    const auto method = parse_method(a.method);

    const BasisTables tables = load_tables(a.basis.spec());
    const FreqVectors fv(tables);
    const fs::path out(a.out);
    fs::create_directories(out / "trials");

    struct Job {
        std::size_t grid;
        double snr;
        int trial;
    };
    std::vector<Job> jobs;
    for (auto g : a.grids)
        for (double s : snrs)
            for (int t = 0; t < a.trials; ++t) jobs.push_back({g, s, t});

    std::vector<std::vector<TrialRow>> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const Job& job = jobs[j];
            TrialSpec ts;
            ts.grid_size = job.grid;
            ts.gamma = a.gamma;
            ts.snr = job.snr;
            ts.seed = derive_seed(a.seed, job.grid, static_cast<std::uint64_t>(job.trial));
            ts.measurements = a.measurements;
            ts.method = method;
            std::optional<TrialData> data;
            std::string sim_error;
            try {
                data = simulate_trial(tables, ts);
            } catch (const std::exception& e) {
                sim_error = e.what();
            }
            for (auto c : cases) {
                TrialRow row;
                row.which = std::string(case_name(c));
                row.grid = job.grid;
                row.snr = job.snr;
                row.trial = job.trial;
                row.seed = ts.seed;
                if (!data) {
                    row.error = sim_error;
                } else {
                    row.gamma_true = data->gamma_true;
                    SolveSpec ss;
                    ss.which = c;
                    ss.starts = a.starts;
                    ss.gamma_init = a.gamma_init;
                    ss.seed = ts.seed;
                    ss.options.max_iters = a.max_iters;
                    try {
                        row.outcome = solve_trial(fv, *data, ss);
                        row.ok = !row.outcome.result.failed;
                    } catch (const std::exception& e) {
                        row.error = e.what();
                    }
                }
                {
                    std::lock_guard lock(log_mutex);
                    std::cerr << a.kind << " " << row.which << " N=" << row.grid << " snr=" << fmt(row.snr)
                              << " trial " << row.trial << ": "
                              << (row.error.empty() ? "error " + fmt(row.outcome.alpha_error) : row.error) << "\n";
                }
                rows[j].push_back(std::move(row));
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_workers = a.workers > 0 ? static_cast<unsigned>(a.workers) : hw;
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::ofstream csv(out / "trials.csv");
    csv << trial_columns << "\n";
    std::ofstream traces;
    if (a.kind == "gamma") {
        traces.open(out / "gamma_trace.csv");
        traces << "case,N,snr,trial,stage,iteration,gamma\n";
    }
    for (const auto& group : rows)
        for (const auto& r : group) {
            const auto& res = r.outcome.result;
            csv << a.kind << ',' << r.which << ',' << r.grid << ',' << fmt(r.snr) << ',' << r.trial << ',' << r.seed
                << ',' << fmt(r.error.empty() ? r.outcome.alpha_error : NAN) << ',' << fmt(r.gamma_true) << ','
                << fmt(r.error.empty() ? res.gamma : NAN) << ',' << fmt(r.error.empty() ? r.outcome.gamma_error : NAN)
                << ',' << fmt(r.error.empty() ? res.objective : NAN) << ',' << res.iterations << ','
                << int(res.converged) << ',' << int(res.degraded) << ',' << int(!r.ok) << ','
                << fmt(r.outcome.seconds) << "\n";
            if (traces.is_open() && r.error.empty()) {
                for (std::size_t i = 0; i < res.gamma_trace_stage1.size(); ++i)
                    traces << r.which << ',' << r.grid << ',' << fmt(r.snr) << ',' << r.trial << ",1," << i << ','
                           << fmt(res.gamma_trace_stage1[i]) << "\n";
                for (std::size_t i = 0; i < res.gamma_trace_stage2.size(); ++i)
                    traces << r.which << ',' << r.grid << ',' << fmt(r.snr) << ',' << r.trial << ",2," << i << ','
                           << fmt(res.gamma_trace_stage2[i]) << "\n";
            }
            Json tj = {{"case", r.which}, {"N", r.grid},        {"snr", snr_json(r.snr)},
                       {"trial", r.trial}, {"seed", r.seed},     {"gamma_true", r.gamma_true},
                       {"ok", r.ok},       {"error", r.error}};
            if (r.error.empty()) {
                tj["result"] = io::recovery_to_json(tables.spec(), res);
                tj["alpha_error"] = r.outcome.alpha_error;
                tj["gamma_error"] = r.outcome.gamma_error;
            }
            std::ostringstream name;
            name << r.which << "_N" << r.grid << "_snr" << fmt(r.snr) << "_t" << r.trial << ".json";
            io::write_json(out / "trials" / name.str(), tj);
        }

    // Summary per (case, N, snr) and log-log slopes along the swept axis.
    std::ofstream sum(out / "summary.csv");
    sum << summary_columns << "\n";
    Json summary = {{"config",
                     {{"kind", a.kind},
                      {"basis", a.basis.json()},
                      {"N", a.grids},
                      {"snr", a.snrs},
                      {"gamma", a.gamma},
                      {"trials", a.trials},
                      {"starts", a.starts},
                      {"cases", a.cases},
                      {"seed", a.seed},
                      {"measurements", a.measurements},
                      {"gamma_init", a.gamma_init},
                      {"max_iters", a.max_iters}}},
                    {"points", Json::array()},
                    {"slopes", Json::object()}};
    for (auto c : cases) {
        std::vector<double> xs, ys;
        for (auto g : a.grids)
            for (double s : snrs) {
                std::vector<double> errs, gerrs;
                int total = 0;
                for (const auto& group : rows)
                    for (const auto& r : group)
                        if (r.which == case_name(c) && r.grid == g && r.snr == s) {
                            ++total;
                            if (r.ok) {
                                errs.push_back(r.outcome.alpha_error);
                                gerrs.push_back(r.outcome.gamma_error);
                            }
                        }
                double med = NAN, mean = NAN, gmed = NAN;
                if (!errs.empty()) {
                    med = median(errs);
                    mean = 0.0;
                    for (double e : errs) mean += e / static_cast<double>(errs.size());
                    gmed = median(gerrs);
                }
                sum << a.kind << ',' << case_name(c) << ',' << g << ',' << fmt(s) << ',' << total << ','
                    << errs.size() << ',' << fmt(med) << ',' << fmt(mean) << ',' << fmt(gmed) << "\n";
                summary["points"].push_back({{"case", case_name(c)},
                                             {"N", g},
                                             {"snr", snr_json(s)},
                                             {"ok_trials", errs.size()},
                                             {"median_alpha_error", errs.empty() ? Json() : Json(med)}});
                if (!errs.empty() && med > 0.0) {
                    xs.push_back(a.kind == "snr-sweep" ? s : static_cast<double>(g));
                    ys.push_back(med);
                }
            }
        const bool finite_axis = std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
        if (xs.size() >= 2 && finite_axis) {
            try {
                summary["slopes"][std::string(case_name(c))] = log_log_slope(xs, ys);
            } catch (const ConfigError&) {
                // a single distinct abscissa has no slope
            }
        }
    }
    io::write_json(out / "summary.json", summary);
    std::cout << "wrote " << (out / "trials.csv").string() << " and " << (out / "summary.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- ctf-demo

struct CtfDemoArgs {
    BasisArgs basis;
    std::size_t grid = 128;
    double gamma = 0.1;
    std::string snr = "inf";
    std::uint64_t seed = 0;
    std::string profile;
    int window = 6;
    std::string out;
    std::string config;
};

int cmd_ctf_demo(const CtfDemoArgs& a) {
    const BasisTables tables = load_tables(a.basis.spec());
    const auto& spec = tables.spec();
    const auto truth = from_params(spec, std::vector<double>(spec.param_count(), 1.0));
    const double snr = parse_snr(a.snr);
    const double sigma = std::isinf(snr) ? 0.0 : snr_to_sigma(tables, truth, snr);
    const auto count = density_to_count(a.gamma, a.grid, spec.radius());
    const auto locs = place_occurrences(a.grid, spec.radius(), {SpacingMode::ArbitrarySpacing, count}, a.seed);
    const auto m = render_measurement(a.grid, tables, truth, locs, sigma, a.seed + 1);

    CtfSpec ctf;
    if (!a.profile.empty()) {
        ctf = load_ctf_profile(a.profile, a.grid);
    } else {
        const std::vector<std::pair<double, double>> profile{{0.0, 1.0}, {0.2, 0.6}, {0.5, 0.25}, {0.75, 0.2}};
        ctf = radial_ctf(a.grid, profile);
    }
    const auto y = apply_ctf(m.grid, ctf);
    const auto truth_stats = spectral_statistics(m.grid, a.window);
    const auto back = deconvolve_moments(spectral_statistics(y, a.window), ctf);

    auto rel = [](auto&& a_vals, auto&& b_vals) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < a_vals.size(); ++i) {
            num = std::max(num, std::abs(a_vals[i] - b_vals[i]));
            den = std::max(den, std::abs(b_vals[i]));
        }
        return den > 0.0 ? num / den : num;
    };
    Json report = {{"config",
                    {{"basis", a.basis.json()},
                     {"N", a.grid},
                     {"gamma", a.gamma},
                     {"snr", a.snr},
                     {"seed", a.seed},
                     {"profile", a.profile},
                     {"window", a.window}}},
                   {"min_abs_ctf", 0.0},
                   {"mean_rel_error", std::abs(back.mean - truth_stats.mean) / std::max(std::abs(truth_stats.mean), 1e-300)},
                   {"power_rel_error", rel(back.power.values(), truth_stats.power.values())},
                   {"bispectrum_rel_error", rel(back.bispectrum, truth_stats.bispectrum)}};
    double min_abs = std::numeric_limits<double>::infinity();
    for (const auto& v : ctf.transfer.values()) min_abs = std::min(min_abs, std::abs(v));
    report["min_abs_ctf"] = min_abs;

    // A transfer with a zero crossing on the lattice must be refused.
    const std::vector<std::pair<double, double>> crossing{{0.0, 1.0}, {0.5, -1.0}};
    try {
        deconvolve_moments(spectral_statistics(y, a.window), radial_ctf(a.grid, crossing));
        report["zero_crossing"] = "accepted";
    } catch (const NumericalError& e) {
        report["zero_crossing"] = std::string("rejected: ") + e.what();
    }
    if (!a.out.empty()) {
        if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
        io::write_json(a.out, report);
    }
    std::cout << report.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image recovery from autocorrelations of measurements with many rotated copies"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "render synthetic measurements");
    sim.basis.add(s);
    s->add_option("--N", sim.grid, "measurement side in pixels");
    s->add_option("--gamma", sim.gamma, "occupancy density");
    s->add_option("--snr", sim.snr, "signal-to-noise ratio or 'inf'");
    s->add_option("--sigma", sim.sigma, "noise level (overrides --snr)");
    s->add_option("--seed", sim.seed);
    s->add_option("--spacing", sim.spacing, "arbitrary | well");
    s->add_option("--measurements", sim.measurements, "number of measurements; >1 writes a directory");
    s->add_option("--truth", sim.truth, "JSON file with a 'truth' coefficient list");
    s->add_option("--out", sim.out, "output file (or directory)");
    s->add_flag("--paper-scale", sim.paper_scale, "allow N above the desk-scale limit");
    s->add_option("--config", sim.config, "JSON file of option defaults");

    MomentsArgs mom;
    auto* mo = app.add_subcommand("moments", "average autocorrelations over measurement files");
    mo->add_option("inputs", mom.inputs, "measurement files or directories");
    mo->add_option("--out", mom.out);
    mo->add_option("--method", mom.method, "direct | fft");
    mo->add_option("--config", mom.config, "JSON file of option defaults");

    RecoverArgs rec;
    auto* r = app.add_subcommand("recover", "recover the image and density from a moment file");
    rec.basis.add(r);
    r->add_option("--moments", rec.moments);
    r->add_option("--sigma", rec.sigma, "noise level (default: from the manifest)");
    r->add_option("--manifest", rec.manifests, "simulation manifest(s): truth and placements");
    r->add_option("--case", rec.which, "known | approx | ignored");
    r->add_option("--gamma-init", rec.gamma_init);
    r->add_option("--starts", rec.starts);
    r->add_option("--seed", rec.seed);
    r->add_option("--surrogate-size", rec.surrogate, "surrogate measurement side (default: N)");
    r->add_option("--max-iters", rec.max_iters);
    r->add_option("--out", rec.out, "output prefix for .json and .pgm");
    r->add_option("--config", rec.config, "JSON file of option defaults");

    ExperimentArgs exp;
    auto* e = app.add_subcommand("experiment", "simulate-and-recover sweeps");
    exp.basis.add(e);
    e->add_option("--kind", exp.kind, "size-sweep | snr-sweep | gamma | recovery");
    e->add_option("--N", exp.grids, "measurement sizes");
    e->add_option("--snr", exp.snrs, "SNR values ('inf' for noiseless)");
    e->add_option("--gamma", exp.gamma);
    e->add_option("--trials", exp.trials);
    e->add_option("--starts", exp.starts);
    e->add_option("--cases", exp.cases, "known approx ignored");
    e->add_option("--seed", exp.seed);
    e->add_option("--measurements", exp.measurements, "measurements averaged per trial");
    e->add_option("--gamma-init", exp.gamma_init);
    e->add_option("--max-iters", exp.max_iters);
    e->add_option("--workers", exp.workers, "parallel trials (default: hardware threads)");
    e->add_option("--method", exp.method, "direct | fft");
    e->add_option("--out", exp.out, "output directory");
    e->add_flag("--paper-scale", exp.paper_scale, "allow paper-scale sizes and trial counts");
    e->add_option("--config", exp.config, "JSON file of option defaults");

    CtfDemoArgs ctf;
    auto* c = app.add_subcommand("ctf-demo", "round trip of moment statistics through a CTF");
    ctf.basis.add(c);
    c->add_option("--N", ctf.grid);
    c->add_option("--gamma", ctf.gamma);
    c->add_option("--snr", ctf.snr);
    c->add_option("--seed", ctf.seed);
    c->add_option("--profile", ctf.profile, "two-column radial CTF profile");
    c->add_option("--window", ctf.window, "bispectrum half-width K");
    c->add_option("--out", ctf.out, "JSON report");
    c->add_option("--config", ctf.config, "JSON file of option defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }
    try {
        if (s->parsed()) {
            apply_config(s, sim.config);
            return cmd_simulate(sim);
        }
        if (mo->parsed()) {
            apply_config(mo, mom.config);
            return cmd_moments(mom);
        }
        if (r->parsed()) {
            apply_config(r, rec.config);
            return cmd_recover(rec);
        }
        if (e->parsed()) {
            apply_config(e, exp.config);
            return cmd_experiment(exp);
        }
        if (c->parsed()) {
            apply_config(c, ctf.config);
            return cmd_ctf_demo(ctf);
        }
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const NumericalError& err) {
        std::cerr << "numerical failure: " << err.what() << "\n";
        return 3;
    } catch (const Json::exception& err) {
        std::cerr << "error: malformed input: " << err.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
