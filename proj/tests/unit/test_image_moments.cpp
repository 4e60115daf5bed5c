#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "mtd/error.hpp"
#include "mtd/image_moments.hpp"

using namespace mtd;
using mtd::testing::random_params;

namespace {

// Box image as a function of centred pixel offsets, zero outside the box.
struct BoxImage {
    RealGrid g;
    int r;
    double operator()(int y, int x) const {
        if (std::abs(y) > r || std::abs(x) > r) return 0.0;
        return g(static_cast<std::size_t>(y + r), static_cast<std::size_t>(x + r));
    }
};

std::vector<BoxImage> dense_rotations(const BasisTables& t, std::span<const double> params, int count) {
    std::vector<BoxImage> out;
    for (int a = 0; a < count; ++a)
        out.push_back({synthesize_params(t, params, 2.0 * std::numbers::pi * (a + 0.5) / count), t.spec().box_radius()});
    return out;
}

BoxImage dc_image(const BasisTables& t, std::span<const double> params) {
    std::vector<double> dc(params.size(), 0.0);
    for (const auto& slot : t.spec().param_slots())
        if (slot.index.nu == 0) dc[slot.offset] = params[slot.offset];
    return {synthesize_params(t, dc, 0.0), t.spec().box_radius()};
}

double rel_err(double got, double want, double scale) { return std::abs(got - want) / scale; }

struct Fixture {
    BasisTables tables{BasisSpec::with_coefficient_count(2.0, 6)};
    FreqVectors fv{tables};
    std::vector<double> params = random_params(tables.spec(), 21);
};

} // namespace

TEST(ImageMoments, TinyBasisShape) {
    Fixture f;
    EXPECT_EQ(f.tables.spec().coefficient_count(), 6u);
    EXPECT_EQ(f.tables.spec().nu_max(), 2);
    EXPECT_EQ(f.fv.angles2().size(), 9u);
    EXPECT_EQ(f.fv.angles3().size(), 12u);
}

TEST(ImageMoments, FirstMomentMatchesPixelSum) {
    Fixture f;
    const auto img = synthesize_params(f.tables, f.params, 0.0);
    double total = 0.0;
    for (double v : img.values()) total += v;
    EXPECT_NEAR(s1(f.fv, f.params), total / 16.0, 1e-12);
    for (int i = 0; i < 8; ++i) {
        const auto rotated = steer_params(f.tables.spec(), f.params, 0.77 * i);
        EXPECT_NEAR(s1(f.fv, rotated), s1(f.fv, f.params), 1e-14);
    }
    std::vector<double> zero(f.params.size(), 0.0);
    EXPECT_EQ(s1(f.fv, zero), 0.0);
}

TEST(ImageMoments, SecondOrderMatchesDenseQuadrature) {
    Fixture f;
    const auto sp = to_spatial(image_moments(f.fv, f.params));
    const auto rot = dense_rotations(f.tables, f.params, 1024);
    const auto g0 = dc_image(f.tables, f.params);
    const int r = f.tables.spec().box_radius();
    const double c = 1.0 / 16.0;
    double scale2 = 0.0, scale2p = 0.0;
    std::vector<std::tuple<int, int, double, double>> want;
    for (int ly = -2 * r; ly <= 2 * r; ++ly)
        for (int lx = -2 * r; lx <= 2 * r; ++lx) {
            double s2 = 0.0, s2p = 0.0;
            for (const auto& im : rot)
                for (int y = -r; y <= r; ++y)
                    for (int x = -r; x <= r; ++x) s2 += im(y, x) * im(y + ly, x + lx);
            s2 *= c / static_cast<double>(rot.size());
            for (int y = -r; y <= r; ++y)
                for (int x = -r; x <= r; ++x) s2p += g0(y, x) * g0(y + ly, x + lx);
            s2p *= c;
            scale2 = std::max(scale2, std::abs(s2));
            scale2p = std::max(scale2p, std::abs(s2p));
            want.emplace_back(ly, lx, s2, s2p);
        }
    for (const auto& [ly, lx, s2, s2p] : want) {
        EXPECT_LT(rel_err(sp.at2(sp.s2, ly, lx), s2, scale2), 1e-8) << ly << "," << lx;
        EXPECT_LT(rel_err(sp.at2(sp.s2pair, ly, lx), s2p, scale2p), 1e-8) << ly << "," << lx;
    }
}

TEST(ImageMoments, ThirdOrderMatchesDenseQuadrature) {
    Fixture f;
    const auto sp = to_spatial(image_moments(f.fv, f.params));
    const auto rot = dense_rotations(f.tables, f.params, 256);
    const auto g0 = dc_image(f.tables, f.params);
    // Support of the box image with exact boundary zeros is |coord| <= 1 for n = 2.
    const int r = 1;
    const double c = 1.0 / 16.0;
    double max3 = 0.0, max3p = 0.0, max3t = 0.0, err3 = 0.0, err3p = 0.0, err3t = 0.0;
    for (int y1 = -2; y1 <= 2; ++y1)
        for (int x1 = -2; x1 <= 2; ++x1)
            for (int y2 = -2; y2 <= 2; ++y2)
                for (int x2 = -2; x2 <= 2; ++x2) {
                    double s3 = 0.0, s3p = 0.0, s3t = 0.0;
                    for (const auto& im : rot)
                        for (int y = -r; y <= r; ++y)
                            for (int x = -r; x <= r; ++x) {
                                const double base = im(y, x) * im(y + y1, x + x1);
                                s3 += base * im(y + y2, x + x2);
                                s3p += base * g0(y + y2, x + x2);
                            }
                    s3 *= c / static_cast<double>(rot.size());
                    s3p *= c / static_cast<double>(rot.size());
                    for (int y = -r; y <= r; ++y)
                        for (int x = -r; x <= r; ++x) s3t += g0(y, x) * g0(y + y1, x + x1) * g0(y + y2, x + x2);
                    s3t *= c;
                    max3 = std::max(max3, std::abs(s3));
                    max3p = std::max(max3p, std::abs(s3p));
                    max3t = std::max(max3t, std::abs(s3t));
                    err3 = std::max(err3, std::abs(sp.at3(sp.s3, y1, x1, y2, x2) - s3));
                    err3p = std::max(err3p, std::abs(sp.at3(sp.s3pair, y1, x1, y2, x2) - s3p));
                    err3t = std::max(err3t, std::abs(sp.at3(sp.s3trip, y1, x1, y2, x2) - s3t));
                }
    EXPECT_LT(err3 / max3, 1e-6);
    EXPECT_LT(err3p / max3p, 1e-6);
    EXPECT_LT(err3t / max3t, 1e-6);
}

TEST(ImageMoments, SupportFitsInsideLattice) {
    Fixture f;
    const auto sp = to_spatial(image_moments(f.fv, f.params));
    const int len = sp.length;
    // Offsets outside the image's autocorrelation support hold zeros.
    for (int y = 0; y < len; ++y)
        for (int x = 0; x < len; ++x) {
            const int yy = y < len / 2 ? y : y - len, xx = x < len / 2 ? x : x - len;
            if (std::abs(yy) > 2 || std::abs(xx) > 2) {
                EXPECT_NEAR(sp.s2[static_cast<std::size_t>(y * len + x)], 0.0, 1e-13);
                EXPECT_NEAR(sp.s2pair[static_cast<std::size_t>(y * len + x)], 0.0, 1e-13);
            }
        }
    EXPECT_LT(sp.max_imag_residue, 1e-12);
}

TEST(ImageMoments, ZeroOrderOnlyNeedsOneAngle) {
    Fixture f;
    std::vector<double> dc(f.params.size(), 0.0);
    for (std::size_t p : f.fv.dc_params()) dc[p] = f.params[p];
    const FreqVectors one(f.tables, 1, 1);
    EXPECT_LT(mtd::testing::max_abs_diff(s2_hat(one, dc), s2_hat(f.fv, dc)), 1e-13);
    EXPECT_LT(mtd::testing::max_abs_diff(s3_hat(one, dc), s3_hat(f.fv, dc)), 1e-13);
    // with rotational parts the single angle is wrong
    EXPECT_GT(mtd::testing::max_abs_diff(s2_hat(one, f.params), s2_hat(f.fv, f.params)), 1e-6);
}

TEST(ImageMoments, RadialThirdMomentAtOrigin) {
    Fixture f;
    std::vector<double> dc(f.params.size(), 0.0);
    for (std::size_t p : f.fv.dc_params()) dc[p] = f.params[p];
    const auto img = synthesize_params(f.tables, dc, 0.0);
    double total = 0.0;
    for (double v : img.values()) total += v;
    const auto s3 = s3_hat(f.fv, dc);
    EXPECT_NEAR(s3[0].real(), total * total * total / 16.0, 1e-10);
    EXPECT_NEAR(s3[0].real(), 256.0 * std::pow(s1(f.fv, dc), 3), 1e-10);
}

TEST(ImageMoments, ZeroCoefficients) {
    Fixture f;
    std::vector<double> zero(f.params.size(), 0.0);
    const auto m = image_moments(f.fv, zero);
    for (const auto* t : {&m.s2, &m.s2pair, &m.s3, &m.s3pair, &m.s3trip})
        for (auto v : *t) EXPECT_EQ(v, Complex{});
}

TEST(ImageMoments, NyquistExactness) {
    for (int count : {6, 10}) {
        const BasisTables tables(BasisSpec::with_coefficient_count(2.5, count));
        const int nu = tables.spec().nu_max();
        const FreqVectors base(tables);
        const FreqVectors doubled(tables, 2 * (4 * nu + 1), 2 * 6 * nu);
        const auto params = random_params(tables.spec(), 5);
        const auto a = image_moments(base, params);
        const auto b = image_moments(doubled, params);
        EXPECT_LT(mtd::testing::max_abs_diff(a.s2, b.s2), 1e-12);
        EXPECT_LT(mtd::testing::max_abs_diff(a.s3, b.s3), 1e-12);
        EXPECT_LT(mtd::testing::max_abs_diff(a.s3pair, b.s3pair), 1e-12);
    }
}

TEST(ImageMoments, SteeringInvariance) {
    const BasisTables tables(BasisSpec::with_coefficient_count(2.5, 10));
    const FreqVectors fv(tables);
    const auto params = random_params(tables.spec(), 6);
    const auto base = to_spatial(image_moments(fv, params));
    for (double phi : {0.3, 1.7, 4.1}) {
        const auto rot = to_spatial(image_moments(fv, steer_params(tables.spec(), params, phi)));
        EXPECT_LT(mtd::testing::max_abs_diff(base.s2, rot.s2), 1e-10);
        EXPECT_LT(mtd::testing::max_abs_diff(base.s2pair, rot.s2pair), 1e-10);
        EXPECT_LT(mtd::testing::max_abs_diff(base.s3, rot.s3), 1e-10);
        EXPECT_LT(mtd::testing::max_abs_diff(base.s3pair, rot.s3pair), 1e-10);
        EXPECT_LT(mtd::testing::max_abs_diff(base.s3trip, rot.s3trip), 1e-10);
    }
}

namespace {

double worst_rel(const std::vector<Complex>& analytic, const std::vector<Complex>& plus,
                 const std::vector<Complex>& minus, double h) {
    double scale = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const Complex fd = (plus[i] - minus[i]) / (2.0 * h);
        scale = std::max(scale, std::abs(fd));
        worst = std::max(worst, std::abs(fd - analytic[i]));
    }
    return scale == 0.0 ? worst : worst / scale;
}

} // namespace

TEST(MomentGradients, MatchFiniteDifferences) {
    const BasisTables tables(BasisSpec::with_coefficient_count(2.5, 10));
    const FreqVectors fv(tables);
    const double h = 1e-6;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto params = random_params(tables.spec(), 100 + seed);
        const auto jac = grad_moments(fv, params);
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto up = params, down = params;
            up[p] += h;
            down[p] -= h;
            const auto mu = image_moments(fv, up), md = image_moments(fv, down);
            EXPECT_LT(worst_rel(jac.s2[p], mu.s2, md.s2, h), 1e-5);
            EXPECT_LT(worst_rel(jac.s2pair[p], mu.s2pair, md.s2pair, h), 1e-5);
            EXPECT_LT(worst_rel(jac.s3[p], mu.s3, md.s3, h), 1e-5);
            EXPECT_LT(worst_rel(jac.s3pair[p], mu.s3pair, md.s3pair, h), 1e-5);
            EXPECT_LT(worst_rel(jac.s3trip[p], mu.s3trip, md.s3trip, h), 1e-5);
            EXPECT_NEAR(jac.s1[p], (mu.s1 - md.s1) / (2.0 * h), 1e-8);
        }
    }
}

TEST(MomentGradients, SecondMomentGradientVanishesAtZero) {
    const BasisTables tables(BasisSpec::with_coefficient_count(2.5, 10));
    const FreqVectors fv(tables);
    const std::vector<double> zero(10, 0.0);
    const auto jac = grad_moments(fv, zero);
    for (const auto& row : jac.s2)
        for (auto v : row) EXPECT_EQ(v, Complex{});
}

TEST(MomentGradients, TripleGradientSymmetricUnderSwap) {
    const BasisTables tables(BasisSpec::with_coefficient_count(2.5, 10));
    const FreqVectors fv(tables);
    const auto jac = grad_moments(fv, random_params(tables.spec(), 3));
    const std::size_t s = fv.lattice_size();
    for (const auto& row : jac.s3trip)
        for (std::size_t k1 = 0; k1 < s; ++k1)
            for (std::size_t k2 = 0; k2 < s; ++k2) EXPECT_LT(std::abs(row[k1 * s + k2] - row[k2 * s + k1]), 1e-12);
}

TEST(MomentGradients, VectorJacobianProductMatchesFiniteDifferences) {
    const BasisTables tables(BasisSpec::with_coefficient_count(2.5, 10));
    const FreqVectors fv(tables);
    std::mt19937_64 gen(9);
    std::normal_distribution<double> dist;
    const std::size_t s = fv.lattice_size();
    SpatialCotangents w;
    w.s1 = dist(gen);
    for (auto* v : {&w.s2, &w.s2pair}) {
        v->resize(s);
        for (double& x : *v) x = dist(gen);
    }
    for (auto* v : {&w.s3, &w.s3pair, &w.s3trip}) {
        v->resize(s * s);
        for (double& x : *v) x = dist(gen);
    }
    auto contract = [&](std::span<const double> params) {
        const auto sp = to_spatial(image_moments(fv, params));
        double acc = w.s1 * sp.s1;
        for (std::size_t i = 0; i < s; ++i) acc += w.s2[i] * sp.s2[i] + w.s2pair[i] * sp.s2pair[i];
        for (std::size_t i = 0; i < s * s; ++i)
            acc += w.s3[i] * sp.s3[i] + w.s3pair[i] * sp.s3pair[i] + w.s3trip[i] * sp.s3trip[i];
        return acc;
    };
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto params = random_params(tables.spec(), seed);
        const auto g = moments_vjp(fv, params, w);
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto up = params, down = params;
            up[p] += 1e-6;
            down[p] -= 1e-6;
            const double fd = (contract(up) - contract(down)) / 2e-6;
            EXPECT_NEAR(g[p], fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}
