#pragma once

// Least-squares fit of (theta, gamma) to measured autocorrelations, the
// two-stage scheme with surrogate separation functions, multi-start
// selection and rotation-aligned error metrics.
//
// The optimization variable is x = (theta, gamma): the flat real parameters
// followed by the density, which is left unconstrained.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mtd/empirical_moments.hpp"
#include "mtd/forward_model.hpp"

namespace mtd {

struct ObjectiveWeights {
    double w1 = 0.5, w2 = 0.0, w3 = 0.0;
    /// w1 = 1/2, w2 = 1/(8 n^2), w3 = 1/(32 n^4).
    static ObjectiveWeights for_radius(double radius);
};

class Objective {
public:
    /// Throws ConfigError when the targets' window differs from the model's.
    Objective(const FreqVectors& fv, const MomentSet& targets, const SeparationFunctions& sep, double sigma);
    Objective(const FreqVectors& fv, const MomentSet& targets, const SeparationFunctions& sep, double sigma,
              ObjectiveWeights weights);

    std::size_t dimension() const { return model_.freq().spec().param_count() + 1; }
    const ForwardModel& model() const { return model_; }
    const ObjectiveWeights& weights() const { return weights_; }

    /// Throws NumericalError on a non-finite prediction.
    double value(std::span<const double> x) const;
    /// Value plus gradient over x, written to `grad` (resized).
    double value_grad(std::span<const double> x, std::vector<double>& grad) const;

private:
    double residual_value(const ForwardPrediction& pred, ForwardPrediction* cotangent) const;

    ForwardModel model_;
    MomentSet targets_;
    ObjectiveWeights weights_;
};

struct ValueGrad {
    double value = 0.0;
    std::vector<double> grad;
};
ValueGrad objective_value_grad(const Objective& obj, std::span<const double> params, double gamma);

struct MinimizeOptions {
    int max_iters = 500;
    /// Stop when max |grad| falls below this.
    double grad_tol = 1e-14;
    /// Stop when an accepted step lowers f by less than f_tol * f.
    double f_tol = 1e-12;
};

struct IterationInfo {
    int iteration = 0;
    std::span<const double> x;
    double value = 0.0;
};

/// Return true to stop the descent after this iteration.
using IterationCallback = std::function<bool(const IterationInfo&)>;

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Line search failed to find an Armijo step; x is the best iterate.
    bool degraded = false;
    bool stopped_by_callback = false;
    /// gamma after every iteration, starting with the initial point.
    std::vector<double> gamma_trace;
};

/// BFGS with Armijo backtracking (c = 1e-4, halving); the inverse Hessian
/// is reset whenever the curvature condition fails.
MinimizeResult minimize(const Objective& obj, std::span<const double> x0, const MinimizeOptions& opts = {},
                        const IterationCallback& callback = {});

struct RecoveryResult {
    std::vector<double> params;
    double gamma = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degraded = false;
    /// Stage 1 left the feasible density range.
    bool failed = false;
    std::string message;
    std::vector<double> gamma_trace_stage1;
    std::vector<double> gamma_trace_stage2;
    std::uint64_t start_seed = 0;
};

/// Single solve with separation functions held fixed (known, surrogate or
/// empty for the well-separated model).
RecoveryResult solve_fixed(const FreqVectors& fv, const MomentSet& targets, double sigma,
                           const SeparationFunctions& sep, std::span<const double> params0, double gamma0,
                           const MinimizeOptions& opts = {});

struct Algorithm1Options {
    double gamma_init = 0.09;
    /// Side of the surrogate measurements used for the separation functions.
    std::size_t surrogate_size = 4000;
    std::uint64_t surrogate_seed = 0;
    MinimizeOptions stage1{};
    MinimizeOptions stage2{};
    int stabilize_window = 10;
    double stabilize_tol = 1e-3;
    double gamma_max = 0.5;
};

/// Stage 1 fits (theta, gamma) against surrogate separation functions at
/// gamma_init until gamma stabilizes; stage 2 rebuilds the surrogates at the
/// stage-1 density and refits from the stage-1 point.
RecoveryResult algorithm1(const FreqVectors& fv, const MomentSet& targets, double sigma,
                          std::span<const double> params0, const Algorithm1Options& opts);

/// Standard normal parameters rescaled so that rate(gamma) S2[0] matches
/// a2[0] - sigma^2 (left unscaled when that is not positive).
std::vector<double> random_start(const FreqVectors& fv, const MomentSet& targets, double sigma, double gamma,
                                 std::uint64_t seed);

/// Runs `solve` from every seed (in parallel where cores allow) and keeps
/// the lowest objective, preferring solves that did not fail.
RecoveryResult multi_start(const std::function<RecoveryResult(std::uint64_t seed)>& solve,
                           std::span<const std::uint64_t> seeds);

struct Alignment {
    double error = 0.0;
    double angle = 0.0; ///< phi minimizing ||alpha* - steer(alpha_hat, phi)||
};

/// Throws ConfigError when alpha* is zero or the sizes differ.
Alignment relative_error_alpha(const BasisSpec& spec, const CoefficientVector& truth,
                               const CoefficientVector& estimate);
double relative_error_gamma(double truth, double estimate);

} // namespace mtd
