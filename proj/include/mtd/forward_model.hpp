#pragma once

// Predicted measurement autocorrelations from (alpha, gamma, xi, zeta, sigma).
// With rate = occupancy_rate(gamma):
//   a1 = rate S1
//   a2[l] = rate (S2[l] + sum_d xi[d] S2pair[d - l]) + sigma^2 delta[l]
//   a3[l1, l2] = rate (S3[l1, l2]
//                + sum_d xi[d] (S3pair[l2 - l1, d - l1] + S3pair[l2, l1 - d] + S3pair[l1, l2 - d])
//                + sum_{e1, e2} zeta3[e1, e2] S3trip[l1 + e1, l2 + e2]
//                + S1 sigma^2 (delta[l1] + delta[l2] + delta[l1 - l2]))
// where zeta3 = p zeta - diag(xi) counts triplets of three distinct
// occurrences. Moment lookups outside their support read as zero, which
// reproduces every summation window of the pair and triplet terms.

#include <span>
#include <vector>

#include "mtd/image_moments.hpp"
#include "mtd/separation.hpp"

namespace mtd {

struct ForwardPrediction {
    int extent = 0; ///< m; a2 has m^2 entries, a3 m^4 (same layout as MomentSet)
    double a1 = 0.0;
    std::vector<double> a2, a3;
};

class ForwardModel {
public:
    /// Throws ConfigError when the separation window belongs to another radius.
    ForwardModel(const FreqVectors& fv, const SeparationFunctions& sep, double sigma);

    const FreqVectors& freq() const { return *fv_; }
    double sigma() const { return sigma_; }
    int extent() const { return extent_; }
    /// Number of distinct-triplet offset pairs that can reach the shift window.
    std::size_t triplet_terms() const { return trip_.size(); }

    ForwardPrediction predict(std::span<const double> params, double gamma) const;

    /// rate * (moment part), plus sigma^2 delta in a2 when `with_noise`.
    ForwardPrediction assemble(const SpatialMoments& s, double rate, bool with_noise) const;

    struct Gradient {
        std::vector<double> params;
        double gamma = 0.0;
    };
    /// Gradient of sum(cotangent * prediction) with respect to (theta, gamma).
    Gradient vjp(std::span<const double> params, double gamma, const ForwardPrediction& cotangent) const;

    /// Partial derivatives of every predicted entry.
    struct Jacobian {
        std::vector<ForwardPrediction> params;
        ForwardPrediction gamma;
    };
    Jacobian jacobian(std::span<const double> params, double gamma) const;

private:
    struct PairTerm {
        int dy, dx;
        double w;
    };
    struct TripletTerm {
        int e1y, e1x, e2y, e2x;
        double w;
    };

    const FreqVectors* fv_;
    double sigma_;
    int extent_;
    std::vector<PairTerm> pair_;
    std::vector<TripletTerm> trip_;
};

ForwardPrediction predict_ac(const FreqVectors& fv, std::span<const double> params, double gamma, double sigma,
                             const SeparationFunctions& sep);

} // namespace mtd
