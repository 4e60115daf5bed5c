#pragma once

// Simulate-then-recover trials shared by the CLI sweeps and the acceptance
// checks. A trial draws a target image, renders measurements, computes their
// averaged moments and recovers the image under one of three assumptions
// about the separation functions.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtd/empirical_moments.hpp"
#include "mtd/recovery.hpp"

namespace mtd {

enum class SeparationCase {
    Known,        ///< exact xi, zeta from the true placements
    Approximated, ///< two-stage scheme with surrogate measurements
    Ignored,      ///< well-separated model, xi = zeta = 0
};

std::string_view case_name(SeparationCase c);
/// "known" | "approx" | "ignored"; throws ConfigError otherwise.
SeparationCase parse_case(std::string_view name);

struct TrialSpec {
    std::size_t grid_size = 1000;
    double gamma = 0.1;
    double snr = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    int measurements = 1;
    SpacingMode spacing = SpacingMode::ArbitrarySpacing;
    AcMethod method = AcMethod::Direct;
};

struct TrialData {
    CoefficientVector truth;
    double gamma_true = 0.0; ///< realized density of the placements
    double sigma = 0.0;
    MomentSet moments;
    SeparationFunctions known; ///< averaged over the measurements
};

/// Standard normal parameters from stream 1 of the seed.
CoefficientVector draw_truth(const BasisSpec& spec, std::uint64_t seed);

/// Throws ConfigError for invalid sizes or densities.
TrialData simulate_trial(const BasisTables& tables, const TrialSpec& spec);

struct SolveSpec {
    SeparationCase which = SeparationCase::Known;
    int starts = 5;
    double gamma_init = 0.09;
    std::uint64_t seed = 0;
    /// Surrogate side for the approximated case; 0 means the data's N.
    std::size_t surrogate_size = 0;
    MinimizeOptions options{};
};

struct TrialOutcome {
    RecoveryResult result;
    double alpha_error = 0.0;
    double gamma_error = 0.0;
    double angle = 0.0;
    double seconds = 0.0;
};

TrialOutcome solve_trial(const FreqVectors& fv, const TrialData& data, const SolveSpec& spec);

/// Equal-weight mean of separation functions with a common radius and count.
SeparationFunctions average_separation(std::span<const SeparationFunctions> parts);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);
double median(std::vector<double> v);

/// Per-trial seeds derived from a base seed, stable across runs.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

} // namespace mtd
