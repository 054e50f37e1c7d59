#include <gtest/gtest.h>

#include "frontstab/model.hpp"

using namespace frontstab;

TEST(CubicAutocatalysis, FarFieldStatesAreEquilibria) {
    const ModelSpec m = cubic_autocatalysis(2.5);
    EXPECT_NO_THROW(m.validate());
    EXPECT_LT(m.eval_reaction(m.left_state).norm(), 1e-15);
    EXPECT_LT(m.eval_reaction(m.right_state).norm(), 1e-15);
    EXPECT_DOUBLE_EQ(m.diffusion(0), 2.5);
    EXPECT_DOUBLE_EQ(m.diffusion(1), 1.0);
}

TEST(CubicAutocatalysis, ReactionConservesTotal) {
    const ModelSpec m = cubic_autocatalysis(3.0);
    Eigen::VectorXd u(2);
    u << 0.3, 0.8;
    const Eigen::VectorXd f = m.eval_reaction(u);
    EXPECT_NEAR(f(0), -0.3 * 0.64, 1e-15);
    EXPECT_NEAR(f(0) + f(1), 0.0, 1e-15);
}

TEST(CubicAutocatalysis, JacobianMatchesFiniteDifferences) {
    const ModelSpec m = cubic_autocatalysis(3.0);
    Eigen::VectorXd u(2);
    u << 0.37, 0.71;
    const Eigen::MatrixXd j = m.eval_jacobian(u);
    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
        Eigen::VectorXd up = u, um = u;
        up(c) += h;
        um(c) -= h;
        const Eigen::VectorXd col = (m.eval_reaction(up) - m.eval_reaction(um)) / (2.0 * h);
        EXPECT_LT((col - j.col(c)).norm(), 1e-9);
    }
}

TEST(CubicAutocatalysis, RejectsNonPositiveDelta) {
    EXPECT_THROW(cubic_autocatalysis(0.0), std::invalid_argument);
    EXPECT_THROW(cubic_autocatalysis(-1.0), std::invalid_argument);
}

TEST(ModelFromRecord, RoundTripsByName) {
    const ModelSpec m = model_from_record("cubic_autocatalysis", 2.0);
    EXPECT_DOUBLE_EQ(m.delta, 2.0);
    EXPECT_THROW(model_from_record("brusselator", 2.0), std::invalid_argument);
}

TEST(ModelSpec, ValidateCatchesInconsistentRecords) {
    ModelSpec m = cubic_autocatalysis(2.0);
    m.diffusion(1) = 0.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = cubic_autocatalysis(2.0);
    m.right_state(1) = 0.5;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}
