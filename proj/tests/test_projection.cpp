#include <gtest/gtest.h>

#include <cmath>

#include "frontstab/front2d.hpp"
#include "frontstab/projection.hpp"

using namespace frontstab;

namespace {

struct Fronts {
    ModelSpec model = cubic_autocatalysis(3.0);
    FieldGrid grid{-100.0, 100.0, 201, 120.0, 32, 4};
    FrontProfile1D planar;
    FrontProfile2D sweep;
    FrontProfile2D displaced;

    Fronts() {
        PlanarFrontOptions o;
        o.x_min = grid.x_min;
        o.x_max = grid.x_max;
        o.n_x = grid.nx;
        o.x_order = grid.x_order;
        planar = solve_planar_front(model, o);
        sweep = sweep_planar(model, planar, grid);
        displaced = sweep_planar(model, planar, grid, 3.0, 2);
    }
};

const Fronts& fronts() {
    static const Fronts f;
    return f;
}

// D_q = (1/ny) sum_j DF(U(x_i, y_j)) exp(-i kappa_q y_j), summed directly.
Eigen::MatrixXcd direct_coefficient(const ModelSpec& m, const FrontProfile2D& f, int i, int q) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
    for (int j = 0; j < f.grid.ny; ++j) {
        Eigen::VectorXd u(2);
        u << f.at(0, i, j), f.at(1, i, j);
        const double phase = -2.0 * M_PI * q * f.grid.y(j) / f.grid.period;
        d += m.eval_jacobian(u).cast<Complex>() * std::polar(1.0, phase);
    }
    return d / static_cast<double>(f.grid.ny);
}

}  // namespace

TEST(JacobianModes, MatchDirectFourierSum) {
    const auto& F = fronts();
    for (int i : {60, 100, 130}) {
        const auto modes = jacobian_fourier_modes(F.model, F.displaced, i, 6);
        for (int q = -6; q <= 6; ++q) {
            EXPECT_LT((modes[q + 6] - direct_coefficient(F.model, F.displaced, i, q)).norm(), 1e-13) << "q=" << q;
        }
    }
}

TEST(JacobianModes, ConvolutionAgreesWithPointwiseTransform) {
    const auto& F = fronts();
    for (int i : {50, 100, 120}) {
        const auto a = jacobian_fourier_modes(F.model, F.displaced, i, 7);
        const auto b = autocatalysis_modes_by_convolution(F.displaced, i, 7);
        for (int q = 0; q < 15; ++q) EXPECT_LT((a[q] - b[q]).norm(), 1e-12);
    }
}

TEST(JacobianModes, RealFieldGivesConjugatePairs) {
    const auto& F = fronts();
    const auto modes = jacobian_fourier_modes(F.model, F.displaced, 100, 5);
    for (int q = 1; q <= 5; ++q) EXPECT_LT((modes[5 - q] - modes[5 + q].conjugate()).norm(), 1e-14);
    // A displacement in mode 2 only excites even harmonics.
    EXPECT_LT(modes[5 + 1].norm(), 1e-13);
    EXPECT_GT(modes[5 + 2].norm(), 1e-3);
}

TEST(ProjectedSystem, PlanarSweepHasOnlyMeanMode) {
    const auto& F = fronts();
    const ProjectedSystem s2 = build_projected_system(F.model, F.sweep, 3);
    const ProjectedSystem s1 = build_projected_system(F.model, F.planar, 3, F.grid.period);
    EXPECT_EQ(s2.dim(), 4 * 7);
    EXPECT_EQ(s2.mode_reach, 6);
    EXPECT_EQ(s1.mode_reach, 0);
    for (double x : {-20.0, -3.3, 0.0, 7.1}) {
        EXPECT_LT((s2.jacobian_mode(0, x) - s1.jacobian_mode(0, x)).norm(), 1e-12);
        for (int q = 1; q <= 6; ++q) EXPECT_LT(s2.jacobian_mode(q, x).norm(), 1e-14);
        EXPECT_LT((assemble_A(s2, x, {0.01, 0.2}) - assemble_A(s1, x, {0.01, 0.2})).norm(), 1e-11);
    }
}

TEST(ProjectedSystem, ModesInterpolateNodeValues) {
    const auto& F = fronts();
    const ProjectedSystem s = build_projected_system(F.model, F.planar, 0, F.grid.period);
    for (int i : {80, 101, 117}) {
        Eigen::VectorXd u(2);
        u << F.planar.fields(i, 0), F.planar.fields(i, 1);
        const Eigen::MatrixXcd exact = F.model.eval_jacobian(u).cast<Complex>();
        EXPECT_LT((s.jacobian_mode(0, F.planar.x(i)) - exact).norm(), 1e-12);
    }
}

TEST(ProjectedSystem, AssembleStructure) {
    const auto& F = fronts();
    const ProjectedSystem s = build_projected_system(F.model, F.displaced, 2);
    const int m = s.half_dim();
    const Complex lambda(0.02, -0.1);
    const double x = 1.5;
    const Eigen::MatrixXcd a = assemble_A(s, x, lambda);
    EXPECT_LT(a.topLeftCorner(m, m).norm(), 0.0 + 1e-300);
    EXPECT_LT((a.topRightCorner(m, m) - Eigen::MatrixXcd::Identity(m, m)).norm(), 1e-300);
    // A3 block (k, nu) = delta_{k nu} (lambda B^-1 + kappa_k^2) - B^-1 D_{k - nu}.
    const Eigen::VectorXd binv = s.diffusion.cwiseInverse();
    for (int k = -2; k <= 2; ++k) {
        for (int nu = -2; nu <= 2; ++nu) {
            Eigen::MatrixXcd expect = -(binv.cast<Complex>().asDiagonal() * s.jacobian_mode(k - nu, x));
            if (k == nu) {
                for (int f = 0; f < 2; ++f) expect(f, f) += lambda * binv(f) + s.kappa[k + 2] * s.kappa[k + 2];
            }
            const Eigen::MatrixXcd got = a.block(m + 2 * (k + 2), 2 * (nu + 2), 2, 2);
            EXPECT_LT((got - expect).norm(), 1e-13);
        }
    }
    // A4 = -c B^-1 on every mode.
    for (int r = 0; r < m; ++r) EXPECT_NEAR(a(m + r, m + r).real(), -s.speed * binv(r % 2), 1e-14);
    EXPECT_THROW(assemble_A(s, s.x_max() + 1.0, lambda), std::out_of_range);
}

TEST(ProjectedSystem, FarFieldMatchesEdgeOfFront) {
    const auto& F = fronts();
    const ProjectedSystem s = build_projected_system(F.model, F.displaced, 1);
    const Complex lambda(0.01, 0.0);
    EXPECT_LT((assemble_A(s, s.x_min(), lambda) - far_field_A(s, -1, lambda)).norm(), 1e-10);
    EXPECT_LT((assemble_A(s, s.x_max(), lambda) - far_field_A(s, 1, lambda)).norm(), 1e-10);
}

TEST(ProjectedSystem, RejectsAliasedProjection) {
    const auto& F = fronts();
    EXPECT_THROW(build_projected_system(F.model, F.displaced, 8), std::invalid_argument);
    EXPECT_NO_THROW(build_projected_system(F.model, F.displaced, 7));
}

TEST(SingleMode, WavenumbersAndPlanarOnly) {
    const auto& F = fronts();
    const ProjectedSystem planar = build_projected_system(F.model, F.planar, 4, 200.0);
    const ProjectedSystem one = single_mode_system(planar, 3);
    EXPECT_EQ(one.K, 0);
    EXPECT_NEAR(one.kappa[0], 2.0 * M_PI * 3 / 200.0, 1e-15);
    EXPECT_NEAR(single_mode_system(planar, 0.25).kappa[0], 0.25, 0.0);
    EXPECT_THROW(single_mode_system(planar, 5), std::invalid_argument);
    const ProjectedSystem wrinkled = build_projected_system(F.model, F.displaced, 2);
    EXPECT_THROW(single_mode_system(wrinkled, 1), std::invalid_argument);
}

TEST(BoundarySubspaces, ClosedFormAgreesWithEigenSplit) {
    const auto& F = fronts();
    const ProjectedSystem s = build_projected_system(F.model, F.displaced, 3);
    for (Complex lambda : {Complex(0.01, 0.0), Complex(0.3, 0.4), Complex(2.0, -5.0), Complex(-0.0005, 0.0)}) {
        const BoundarySubspaces e = boundary_subspaces(s, lambda);
        const BoundarySubspaces c = autocatalysis_boundary_subspaces(s, lambda);
        ASSERT_EQ(e.minus.cols(), s.half_dim());
        ASSERT_EQ(e.plus.cols(), s.half_dim());
        EXPECT_LT(principal_angle(e.minus, c.minus), 1e-10);
        EXPECT_LT(principal_angle(e.plus, c.plus), 1e-10);
        // Invariance: A X lies in span X.
        const Eigen::MatrixXcd am = far_field_A(s, -1, lambda);
        EXPECT_LT(principal_angle(am * e.minus, e.minus), 1e-9);
    }
}

TEST(PrincipalAngle, KnownConfigurations) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(3, 1), b = Eigen::MatrixXcd::Zero(3, 1);
    a(0, 0) = 1.0;
    b(0, 0) = std::cos(0.3);
    b(1, 0) = Complex(0.0, std::sin(0.3));
    EXPECT_NEAR(principal_angle(a, b), 0.3, 1e-14);
    EXPECT_NEAR(principal_angle(a, 5.0 * a), 0.0, 1e-15);
}
