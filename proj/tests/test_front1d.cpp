#include <gtest/gtest.h>

#include <cmath>

#include "frontstab/front1d.hpp"

using namespace frontstab;

namespace {

PlanarFrontOptions fine() {
    PlanarFrontOptions o;
    o.x_order = 4;
    return o;
}

}  // namespace

// With equal diffusivities u + v = 1 and the front is v = 1 / (1 + exp(x / sqrt 2))
// travelling at c = 1 / sqrt 2.
TEST(PlanarFront, EqualDiffusivityExactSolution) {
    const ModelSpec m = cubic_autocatalysis(1.0);
    const FrontProfile1D f = solve_planar_front(m, fine());
    EXPECT_NEAR(f.speed, 1.0 / std::sqrt(2.0), 1e-6);

    // Locate v = 1/2 by linear interpolation and compare the shifted profile.
    double x_half = 0.0;
    for (int i = 0; i + 1 < f.n_x; ++i) {
        const double a = f.fields(i, 1) - 0.5, b = f.fields(i + 1, 1) - 0.5;
        if (a >= 0.0 && b < 0.0) x_half = f.x(i) + f.h() * a / (a - b);
    }
    double err = 0.0;
    for (int i = 0; i < f.n_x; ++i) {
        const double v = 1.0 / (1.0 + std::exp((f.x(i) - x_half) / std::sqrt(2.0)));
        err = std::max({err, std::abs(f.fields(i, 1) - v), std::abs(f.fields(i, 0) + f.fields(i, 1) - 1.0)});
    }
    EXPECT_LT(err, 1e-5);
}

TEST(PlanarFront, SpeedConvergesUnderRefinement) {
    const ModelSpec m = cubic_autocatalysis(3.0);
    PlanarFrontOptions a = fine(), b = fine();
    a.n_x = 1501;
    b.n_x = 3001;
    const double ca = solve_planar_front(m, a).speed, cb = solve_planar_front(m, b).speed;
    // Fourth order: halving h cuts the error by about 16.
    PlanarFrontOptions c = fine();
    c.n_x = 6001;
    const double cc = solve_planar_front(m, c).speed;
    EXPECT_GT(std::abs(ca - cb), 8.0 * std::abs(cb - cc));
}

TEST(PlanarFront, SpeedDecreasesWithDelta) {
    double prev = 1.0;
    for (double d : {1.0, 2.0, 2.5, 3.0}) {
        const double c = solve_planar_front(cubic_autocatalysis(d), fine()).speed;
        EXPECT_LT(c, prev);
        prev = c;
    }
}

TEST(PlanarFront, ProfileInvariants) {
    const ModelSpec m = cubic_autocatalysis(2.5);
    FrontProfile1D f = solve_planar_front(m, fine());
    EXPECT_NO_THROW(f.validate(m, 1e-9));
    for (int i = 0; i + 1 < f.n_x; ++i) EXPECT_GE(f.fields(i + 1, 0), f.fields(i, 0) - 1e-12);
    f.fields(0, 0) = 0.1;
    EXPECT_THROW(f.validate(m, 0.0), std::invalid_argument);
}

TEST(PlanarFront, OffCentreFrontKeepsSpeed) {
    const ModelSpec m = cubic_autocatalysis(3.0);
    PlanarFrontOptions o = fine();
    o.center = 50.0;
    EXPECT_NEAR(solve_planar_front(m, o).speed, solve_planar_front(m, fine()).speed, 1e-8);
}

TEST(PlanarFront, ShortDomainRejected) {
    PlanarFrontOptions o;
    o.x_min = -5.0;
    o.x_max = 5.0;
    o.n_x = 101;
    EXPECT_THROW(solve_planar_front(cubic_autocatalysis(3.0), o), DomainTooShortError);
}

// Behind the front DF(0,1) is lower triangular, ahead it vanishes, so the curves
// are -1 - delta s + i c mu, -delta s + i c mu and the shared -s + i c mu, s = mu^2 + kappa^2.
TEST(ContinuousSpectrum, ClosedFormCurves) {
    const double delta = 3.0, c = 0.55, L = 200.0;
    const int k = 2;
    const double kappa = 2.0 * M_PI * k / L;
    MuRange r{-2.0, 2.0, 41};
    const auto curves = continuous_spectrum_curves(cubic_autocatalysis(delta), c, k, L, r);
    ASSERT_EQ(curves.size(), 3u);
    int doubled = 0;
    for (const auto& cv : curves) {
        ASSERT_EQ(cv.points.size(), 41u);
        if (cv.multiplicity == 2) ++doubled;
        for (int s = 0; s < 41; ++s) {
            const double mu = -2.0 + 0.1 * s, q = mu * mu + kappa * kappa;
            const std::complex<double> cand[] = {{-1.0 - delta * q, c * mu}, {-delta * q, c * mu}, {-q, c * mu}};
            double best = 1e9;
            for (auto z : cand) best = std::min(best, std::abs(cv.points[s] - z));
            EXPECT_LT(best, 1e-12);
        }
    }
    EXPECT_EQ(doubled, 1);
}

TEST(ContinuousSpectrum, RightOfSpectrumTest) {
    const ModelSpec m = cubic_autocatalysis(3.0);
    EXPECT_TRUE(right_of_continuous_spectrum(m, 0.547, 200.0, 4, {0.01, 0.0}));
    EXPECT_TRUE(right_of_continuous_spectrum(m, 0.547, 200.0, 4, {0.0, 0.3}));
    EXPECT_FALSE(right_of_continuous_spectrum(m, 0.547, 200.0, 4, {-0.5, 0.0}));
}
