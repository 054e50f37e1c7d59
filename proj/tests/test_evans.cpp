#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "frontstab/evans.hpp"
#include "frontstab/front2d.hpp"

using namespace frontstab;

namespace {

constexpr double kPi = std::numbers::pi;

LogDet as_logdet(Complex z) {
    if (z == Complex(0.0)) return LogDet{-std::numeric_limits<double>::infinity(), 0.0};
    return LogDet{std::log(std::abs(z)), std::arg(z)};
}

// Planar delta = 3 front on the standard domain and its projections.
struct Planar {
    ModelSpec model = cubic_autocatalysis(3.0);
    FrontProfile1D front;
    ProjectedSystem sys;  // K = 2, L = 200

    Planar() {
        PlanarFrontOptions o;
        o.x_order = 4;
        front = solve_planar_front(model, o);
        sys = build_projected_system(model, front, 2, 200.0);
    }
};

const Planar& planar() {
    static const Planar p;
    return p;
}

EvansOptions window(double x_star = 0.0) {
    EvansOptions eo;
    eo.x_left = -25.0;
    eo.x_right = 25.0;
    eo.x_star = x_star;
    return eo;
}

}  // namespace

TEST(Backend, NamesRoundTrip) {
    EXPECT_EQ(parse_backend(backend_name(Backend::Riccati)), Backend::Riccati);
    EXPECT_EQ(parse_backend(backend_name(Backend::DruryOja)), Backend::DruryOja);
    EXPECT_THROW(parse_backend("shooting"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Zero location on synthetic functions

TEST(ScanAndRefine, SignChangesAndDoubleZero) {
    const auto f = [](double x) { return as_logdet((x - 0.1) * (x + 0.2) * (x + 0.2) * (x - 0.35) * std::exp(3.0 * x)); };
    const ScanResult r = scan_and_refine(f, -0.5, 0.5, 40);
    ASSERT_EQ(r.zeros.size(), 3u);
    EXPECT_NEAR(r.zeros[0].lambda, -0.2, 1e-6);
    EXPECT_EQ(r.zeros[0].kind, ZeroKind::DoubleDip);
    EXPECT_EQ(r.zeros[0].multiplicity, 2);
    EXPECT_NEAR(r.zeros[1].lambda, 0.1, 1e-9);
    EXPECT_EQ(r.zeros[1].kind, ZeroKind::SignChange);
    EXPECT_NEAR(r.zeros[2].lambda, 0.35, 1e-9);
    EXPECT_EQ(r.grid.size(), 40u);
    EXPECT_GT(r.evaluations, 40);
}

TEST(ScanAndRefine, DipHidingTwoCloseRootsIsSplit) {
    // Both roots fall between two samples, so only a dip is visible on the grid.
    const auto f = [](double x) { return as_logdet((x - 0.503) * (x - 0.5034)); };
    const ScanResult r = scan_and_refine(f, 0.0, 1.0, 21);
    ASSERT_EQ(r.zeros.size(), 2u);
    EXPECT_NEAR(r.zeros[0].lambda, 0.503, 1e-8);
    EXPECT_NEAR(r.zeros[1].lambda, 0.5034, 1e-8);
    EXPECT_EQ(r.zeros[0].kind, ZeroKind::SignChange);
}

TEST(ScanAndRefine, SampleOnZeroKeepsMultiplicity) {
    const auto f = [](double x) { return as_logdet((x - 0.25) * (x + 0.5) * (x + 0.5)); };
    const ScanResult r = scan_and_refine(f, -1.0, 1.0, 9);
    ASSERT_EQ(r.zeros.size(), 2u);
    EXPECT_EQ(r.zeros[0].lambda, -0.5);
    EXPECT_EQ(r.zeros[0].multiplicity, 2);
    EXPECT_EQ(r.zeros[1].lambda, 0.25);
    EXPECT_EQ(r.zeros[1].multiplicity, 1);
}

TEST(ScanAndRefine, RejectsBadInterval) {
    const auto f = [](double x) { return as_logdet(x); };
    EXPECT_THROW(scan_and_refine(f, 1.0, 0.0, 10), std::invalid_argument);
    EXPECT_THROW(scan_and_refine(f, 0.0, 1.0, 1), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Argument principle on synthetic functions

TEST(Contours, SegmentsCloseUp) {
    const ContourSpec s = sectorial_contour(1.5, 3.0, 1e-4);
    ASSERT_TRUE(s.mirrored);
    ASSERT_FALSE(s.segments.empty());
    // Upper half from the real cap point round to the origin semicircle.
    EXPECT_LT(std::abs(s.segments.front().at(0.0) - Complex(1.5, 0.0)), 1e-15);
    for (std::size_t i = 0; i + 1 < s.segments.size(); ++i) {
        EXPECT_LT(std::abs(s.segments[i].at(1.0) - s.segments[i + 1].at(0.0)), 1e-14);
    }
    EXPECT_LT(std::abs(s.segments.back().at(1.0) - Complex(1e-4, 0.0)), 1e-14);
    for (const auto& seg : s.segments) EXPECT_GE(seg.at(0.5).imag(), 0.0);
    EXPECT_THROW(sectorial_contour(1.5, 1.0), std::invalid_argument);
    EXPECT_THROW(circle_contour(0.0, -1.0), std::invalid_argument);
    EXPECT_TRUE(circle_contour(Complex(0.2, 0.0), 1.0).mirrored);
    EXPECT_FALSE(circle_contour(Complex(0.2, 0.3), 1.0).mirrored);
}

TEST(WindingNumber, RealPolynomialInSector) {
    // Zeros 0.5 +- 0.5i and 1 inside; -1, 2.5 +- 2.8i and 0 outside the sector.
    const std::vector<Complex> zeros{{0.5, 0.5}, {0.5, -0.5}, {1.0, 0.0}, {-1.0, 0.0}, {2.5, 2.8}, {2.5, -2.8}, {0.0, 0.0}};
    const ComplexEvaluator f = [&](Complex z) {
        Complex p = 1.0;
        for (Complex r : zeros) p *= z - r;
        return PhaseValue(as_logdet(p));
    };
    const WindingResult w = winding_number(f, sectorial_contour(1.5, 3.0, 1e-4));
    EXPECT_EQ(w.count, 3);
    EXPECT_NEAR(w.raw, 3.0, 1e-6);
    EXPECT_GT(w.evaluations, 8);
    EXPECT_EQ(winding_number(f, circle_contour(0.0, 1e-4)).count, 1);
}

TEST(WindingNumber, ClosedContourWithComplexCentre) {
    const ComplexEvaluator f = [](Complex z) { return PhaseValue(as_logdet((z - Complex(0.3, 1.0)) * (z - Complex(0.1, 1.2)) * (z + 2.0))); };
    EXPECT_EQ(winding_number(f, circle_contour(Complex(0.2, 1.1), 0.5)).count, 2);
}

TEST(WindingNumber, LargeContinuousPhaseIsLifted) {
    // (z - 0.3) exp(400 z): the exponential winds hundreds of times along the
    // contour but is declared continuous, so only the polynomial part unwraps.
    const ComplexEvaluator f = [](Complex z) {
        const Complex core = z - 0.3;
        return PhaseValue(LogDet{std::log(std::abs(core)) + 400.0 * z.real(), std::arg(core) + 400.0 * z.imag()},
                          400.0 * z.real(), 400.0 * z.imag());
    };
    EXPECT_EQ(winding_number(f, sectorial_contour(1.5, 3.0, 1e-4)).count, 1);
}

TEST(WindingNumber, FastModulusChangeForcesRefinement) {
    // z^5 near a small circle: the argument turns 5 times; the modulus test
    // rejects coarse pieces whose wrapped differences alias.
    const ComplexEvaluator f = [](Complex z) { return PhaseValue(as_logdet(std::pow(z, 5) * (z - 2.0))); };
    EXPECT_EQ(winding_number(f, circle_contour(0.0, 1e-3)).count, 5);
}

TEST(WindingNumber, ZeroOnContourIsReported) {
    const ComplexEvaluator f = [](Complex z) { return PhaseValue(as_logdet(z - 1.0)); };
    EXPECT_THROW(winding_number(f, circle_contour(0.0, 1.0)), UnresolvedWindingError);
}

// ---------------------------------------------------------------------------
// Evans function of the planar front

TEST(EvansPlanar, ConjugateSymmetry) {
    const auto& P = planar();
    const ProjectedSystem one = single_mode_system(P.sys, 1);
    for (Backend b : {Backend::Riccati, Backend::DruryOja}) {
        for (const ProjectedSystem* s : {&one, &P.sys}) {
            for (Complex l : {Complex(0.001, 0.02), Complex(0.3, -0.7)}) {
                const Complex d = evans(*s, l, b, window()).plain();
                const Complex dc = evans(*s, std::conj(l), b, window()).plain();
                EXPECT_LT(std::abs(dc - std::conj(d)), 1e-10 * std::abs(d)) << backend_name(b);
            }
        }
    }
}

TEST(EvansPlanar, RealOnRealAxis) {
    const auto& P = planar();
    for (Backend b : {Backend::Riccati, Backend::DruryOja}) {
        const Complex d = evans(P.sys, Complex(0.004, 0.0), b, window()).plain();
        EXPECT_LT(std::abs(d.imag()), 1e-10 * std::abs(d));
    }
}

TEST(EvansPlanar, MatchingPointInvarianceOfZeros) {
    const auto& P = planar();
    const ProjectedSystem one = single_mode_system(P.sys, 1);
    ScanOptions so;
    so.root_tol = 1e-13;
    for (Backend b : {Backend::Riccati, Backend::DruryOja}) {
        std::vector<double> found;
        for (double xs : {-8.0, 0.0, 8.0}) {
            EvansOptions eo = window(xs);
            eo.tol = {1e-12, 1e-10};
            const ScanResult r = scan_and_refine(one, 0.0003, 0.0007, 5, b, eo, so);
            ASSERT_EQ(r.zeros.size(), 1u);
            found.push_back(r.zeros[0].lambda);
        }
        EXPECT_NEAR(found[0], found[1], 1e-8);
        EXPECT_NEAR(found[2], found[1], 1e-8);
    }
}

TEST(EvansPlanar, BackendsShareZerosAndDifferByNonvanishingFactor) {
    const auto& P = planar();
    const ProjectedSystem one = single_mode_system(P.sys, 1);
    EvansOptions eo = window();
    eo.tol = {1e-12, 1e-10};
    ScanOptions so;
    so.root_tol = 1e-13;
    const double zr = scan_and_refine(one, 0.0003, 0.0007, 5, Backend::Riccati, eo, so).zeros.at(0).lambda;
    const double zd = scan_and_refine(one, 0.0003, 0.0007, 5, Backend::DruryOja, eo, so).zeros.at(0).lambda;
    EXPECT_NEAR(zr, zd, 1e-9);
    // Away from zeros the subspaces are transverse.
    EXPECT_LT(evans_angle(one, zr, eo), 1e-5);
    EXPECT_GT(evans_angle(one, 0.05, eo), 1e-3);
}

TEST(EvansPlanar, TranslationZeroAtOrigin) {
    const auto& P = planar();
    const ProjectedSystem zero_mode = single_mode_system(P.sys, 0);
    const ScanResult r = scan_and_refine(zero_mode, -2e-4, 2e-4, 9, Backend::Riccati, window());
    ASSERT_EQ(r.zeros.size(), 1u);
    EXPECT_NEAR(r.zeros[0].lambda, 0.0, 1e-7);
}

TEST(EvansPlanar, MatchingPointOutsideWindowRejected) {
    const auto& P = planar();
    EXPECT_THROW(evans_riccati(P.sys, 0.01, window(30.0)), std::invalid_argument);
    EXPECT_THROW(evans_drury_oja(P.sys, 0.01, window(-25.0)), std::invalid_argument);
}

TEST(EvansPlanar, FactorizationIntoModes) {
    const auto& P = planar();
    for (Complex l : {Complex(0.002, 0.0), Complex(0.01, 0.03), Complex(-0.0003, 0.0)}) {
        const FactorizationReport rep = factorization_check(P.sys, l, window());
        EXPECT_LT(rep.defect, 1e-8) << l;
    }
}

TEST(EvansPlanar, DispersionRelation) {
    const auto& P = planar();
    DispersionOptions dopt;
    dopt.evans = window();
    const std::vector<double> ks{0.0, 2.0 * kPi / 200.0, 4.0 * kPi / 200.0};
    const auto d = dispersion_relation(P.model, P.front, ks, dopt);
    ASSERT_EQ(d.size(), 3u);
    for (const auto& p : d) EXPECT_TRUE(p.found);
    EXPECT_NEAR(d[0].growth, 0.0, 1e-7);
    EXPECT_GT(d[1].growth, 0.0);
    // The single-mode zero is the planar zero of that mode.
    const ProjectedSystem one = single_mode_system(P.sys, 1);
    EXPECT_LT(std::abs(evans_riccati(one, d[1].growth, window()).plain()),
              1e-4 * std::abs(evans_riccati(one, 2.0 * d[1].growth, window()).plain()));
}

TEST(EvansPlanar, StableBelowCriticalDelta) {
    const ModelSpec m = cubic_autocatalysis(2.0);
    PlanarFrontOptions o;
    o.x_order = 4;
    const FrontProfile1D f = solve_planar_front(m, o);
    DispersionOptions dopt;
    dopt.evans = window();
    std::vector<double> ks;
    for (int k = 1; k <= 6; ++k) ks.push_back(2.0 * kPi * k / 200.0);
    for (const auto& p : dispersion_relation(m, f, ks, dopt)) {
        ASSERT_TRUE(p.found);
        EXPECT_LE(p.growth, 0.0);
    }
}

// ---------------------------------------------------------------------------
// Bounds and asymptotics

TEST(SectorialBounds, SpectralNormOracle) {
    const auto& P = planar();
    // det DF = 0 for this model, so the spectral norm is the Frobenius norm.
    double expect = 0.0;
    for (int i = 0; i < P.front.n_x; ++i) {
        const double u = P.front.fields(i, 0), v = P.front.fields(i, 1);
        expect = std::max(expect, std::sqrt(2.0 * std::pow(v, 4) + 8.0 * u * u * v * v));
    }
    const SectorialBounds b = sectorial_bounds(P.model, P.front);
    EXPECT_NEAR(b.df_norm, expect, 1e-12);
    EXPECT_DOUBLE_EQ(b.kappa, 1.0);
    EXPECT_DOUBLE_EQ(b.re_cap, b.df_norm);
    EXPECT_NEAR(b.sector_cap, P.front.speed * P.front.speed / 4.0 + 2.0 * b.df_norm, 1e-14);
    EXPECT_GE(b.df_norm, std::sqrt(2.0));
}

TEST(Asymptotics, ClosedForms) {
    EXPECT_LT(std::abs(large_lambda_asymptote(1.0, 3, 1e3) - 2.0), 1e-15);
    EXPECT_LT(std::abs(large_lambda_asymptote(4.0, 0, 1e3) - 1.0), 1e-15);
    const Complex l = std::polar(1e3, 0.6);
    EXPECT_LT(std::abs(large_lambda_asymptote(3.0, 1, l) - 2.0 * std::pow(std::polar(1.0 / std::sqrt(3.0), 0.6), 3)),
              1e-14);
}

TEST(Asymptotics, NormalizedModeProductApproachesLimit) {
    const auto& P = planar();
    const ProjectedSystem sys = build_projected_system(P.model, P.front, 2, 200.0);
    double prev = 1.0;
    for (double r : {1e2, 1e3}) {
        const Complex ratio = normalized_mode_product(sys, r, window()) / mode_product_asymptote(sys, r);
        EXPECT_LT(std::abs(ratio - 1.0), 0.1);
        EXPECT_LT(std::abs(ratio - 1.0), prev);
        prev = std::abs(ratio - 1.0);
    }
    const Complex l = std::polar(1e3, 0.5);
    EXPECT_LT(std::abs(normalized_mode_product(sys, l, window()) / mode_product_asymptote(sys, l) - 1.0), 0.1);
}

// ---------------------------------------------------------------------------
// Direct eigensolver

TEST(DirectEigs, PlanarSweepSpectrum) {
    const ModelSpec m = cubic_autocatalysis(3.0);
    const FieldGrid g{-100.0, 100.0, 201, 120.0, 8, 4};
    PlanarFrontOptions o;
    o.x_min = g.x_min;
    o.x_max = g.x_max;
    o.n_x = g.nx;
    o.x_order = g.x_order;
    const FrontProfile1D f = solve_planar_front(m, o);
    const FrontProfile2D sweep = sweep_planar(m, f, g);
    const EigsResult r = direct_projection_eigs(m, sweep, 0.01, 6);
    ASSERT_EQ(r.eigenvalues.size(), 6u);
    EXPECT_EQ(r.converged, 6);
    EXPECT_GT(r.operator_applications, 0);
    EXPECT_FALSE(r.solver.empty());
    for (std::size_t i = 1; i < r.eigenvalues.size(); ++i) {
        EXPECT_LE(std::abs(r.eigenvalues[i - 1] - 0.01), std::abs(r.eigenvalues[i] - 0.01) + 1e-15);
    }
    // The translation eigenvalue, and the mode-1 growth rate (doubly, from +-k).
    bool translation = false;
    int growth = 0;
    DispersionOptions dopt;
    dopt.evans.x_left = -25.0;
    dopt.evans.x_right = 25.0;
    const double rate = dispersion_relation(m, f, {2.0 * kPi / 120.0}, dopt).at(0).growth;
    for (Complex e : r.eigenvalues) {
        if (std::abs(e) < 1e-6) translation = true;
        if (std::abs(e - rate) < 1e-5) ++growth;
    }
    EXPECT_TRUE(translation);
    EXPECT_EQ(growth, 2);
}
