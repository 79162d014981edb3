#include <bve/diagnostics.hpp>
#include <bve/initial_condition.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bve;

TEST(Overshoot, Values) {
    const Grid g(8, 4);
    EXPECT_EQ(overshoot_max(ScalarField(g, 0.9), 0.9), 0.0);
    ScalarField S(g, 0.5);
    S(3, 2) = 0.95;
    EXPECT_NEAR(overshoot_max(S, 0.9), 0.05, 1e-15);
}

TEST(Front, ZeroFieldAndFullField) {
    const Grid g(50, 4);
    EXPECT_EQ(front_position(ScalarField(g, 0.0), 0.5, 0.5), 0.0);
    EXPECT_EQ(front_position(ScalarField(g, 1.0), 0.5, 0.5), 1.0);
}

TEST(Front, StepProfile) {
    const Grid g(100, 4);
    const ScalarField S = ScalarField::sample(g, [](double x, double) { return x < 0.5 ? 1.0 : 0.0; });
    EXPECT_NEAR(front_position(S, 0.5, 0.5), 0.5, g.dx());
    const auto w = front_width(S, 0.1, 0.8, 0.5);
    ASSERT_TRUE(w.has_value());
    EXPECT_LE(*w, 2 * g.dx());
}

TEST(Front, LinearRampWidth) {
    const Grid g(200, 4);
    const ScalarField S = ScalarField::sample(g, [](double x, double) { return 1.0 - x; });
    const auto w = front_width(S, 0.1, 0.8, 0.5);
    ASSERT_TRUE(w.has_value());
    EXPECT_NEAR(*w, 0.7, 2 * g.dx());
}

TEST(Front, MissingLevelIsEmpty) {
    const Grid g(50, 4);
    EXPECT_FALSE(front_width(ScalarField(g, 0.5), 0.1, 0.8, 0.5).has_value());
    EXPECT_FALSE(front_width(ScalarField(g, 0.0), 0.1, 0.8, 0.5).has_value());
}

TEST(Front, ProfileInterpolatesRows) {
    const Grid g(10, 4);
    const ScalarField S = ScalarField::sample(g, [](double, double z) { return z; });
    for (double v : horizontal_profile(S, 0.5)) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(Energy, Basics) {
    const Grid g(16, 16);
    EXPECT_EQ(energy(ScalarField(g), 1e-2), 0.0);
    const ScalarField S = ScalarField::sample(g, [](double x, double z) { return x + z; });
    EXPECT_EQ(energy(S, 0.0), norm_l2_squared(S));
}

TEST(Energy, SingleModeMatchesParseval) {
    auto err = [](int n) {
        const Grid g(n, n);
        const double pi = std::numbers::pi;
        const ScalarField S =
            ScalarField::sample(g, [&](double x, double z) { return 2 * std::sin(pi * x) * std::sin(2 * pi * z); });
        const double exact = 1.0 + 1e-2 * pi * pi * 5.0;
        return std::abs(energy(S, 1e-2) - exact);
    };
    const double e1 = err(32), e2 = err(64);
    EXPECT_LT(e2, 1e-2);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.2);
}

TEST(Energy, PureFunction) {
    const Grid g(16, 8);
    const ScalarField S = ScalarField::sample(g, [](double x, double z) { return std::sin(7 * x) * z; });
    EXPECT_EQ(energy(S, 1e-3), energy(S, 1e-3));
    EXPECT_EQ(total_mass(S), total_mass(S));
}

TEST(InitialData, InjectionValues) {
    const InitialCondition ic = InitialCondition::injection_default();
    EXPECT_NEAR(ic.eval(0.0, 0.5), 0.9, 1e-15);
    for (double x : {0.0, 0.3, 1.0}) EXPECT_EQ(ic.eval(x, 0.1), 0.0);
    EXPECT_EQ(ic.eval(1.0, 0.5), 0.0);
    EXPECT_EQ(ic.inflow(0.25), 0.0);
    EXPECT_EQ(ic.inflow(0.75), 0.9);
    const ScalarField S = ic.sample(Grid(500, 20));
    for (double v : S.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(InitialData, CustomOutOfRangeRejected) {
    InitialCondition ic;
    ic.kind = InitialCondition::Kind::custom;
    ic.plateau = 1.5;
    ic.steepness = 1.0;
    EXPECT_THROW(ic.sample(Grid(8, 8)), std::invalid_argument);
}
