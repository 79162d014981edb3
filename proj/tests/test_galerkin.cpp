#include <bve/galerkin.hpp>
#include <bve/initial_condition.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace bve;

namespace {

const double pi = std::numbers::pi;

CoefVector random_coefficients(int n, unsigned seed, double norm) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    CoefVector c(n);
    for (int k = 0; k < n; ++k) c[k] = d(rng);
    return c * (norm / c.norm());
}

}  // namespace

TEST(SineBasis, Orthonormal) {
    for (int m : {4, 6, 8}) {
        const SineBasis b(m, m / 2 + 1);
        EXPECT_LT((b.gram() - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(SineBasis, VanishesOnBoundary) {
    const SineBasis b(4, 4);
    const CoefVector c = random_coefficients(16, 1, 1.0);
    for (double t : {0.0, 0.3, 0.77, 1.0}) {
        EXPECT_NEAR(b.eval(c, 0.0, t), 0.0, 1e-14);
        EXPECT_NEAR(b.eval(c, 1.0, t), 0.0, 1e-14);
        EXPECT_NEAR(b.eval(c, t, 0.0), 0.0, 1e-14);
        EXPECT_NEAR(b.eval(c, t, 1.0), 0.0, 1e-14);
    }
}

TEST(SineBasis, RejectsCoarseQuadrature) { EXPECT_THROW(SineBasis(4, 4, 4), std::invalid_argument); }

TEST(Projection, PureModeAndZero) {
    const SineBasis b(4, 4);
    const CoefVector c = project_initial([](double x, double z) { return 2 * std::sin(pi * x) * std::sin(pi * z); }, b);
    CoefVector e = CoefVector::Zero(16);
    e[0] = 1.0;
    EXPECT_LT((c - e).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(project_initial([](double, double) { return 0.0; }, b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Projection, PolynomialMatchesSimpsonOracle) {
    const SineBasis b(4, 4);
    auto S0 = [](double x, double z) { return x * (1 - x) * z * (1 - z); };
    const CoefVector c = project_initial(S0, b);
    for (int k = 1; k <= 4; ++k)
        for (int l = 1; l <= 4; ++l) {
            const double ref = oracle::simpson_2d(
                [&](double x, double z) { return S0(x, z) * 2 * std::sin(k * pi * x) * std::sin(l * pi * z); }, 1000);
            EXPECT_NEAR(c[b.index(k, l)], ref, 1e-7) << k << "," << l;
        }
}

TEST(Projection, GriddedMatchesAnalyticForSmoothData) {
    const SineBasis b(4, 4);
    auto S0 = [](double x, double z) { return x * (1 - x) * z * (1 - z); };
    const CoefVector a = project_initial(S0, b);
    const CoefVector g = project_initial(ScalarField::sample(Grid(256, 256), S0), b);
    EXPECT_LT((a - g).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(ResidualK, TrivialDynamicsVanish) {
    const SineBasis b(4, 4);
    const CoefVector c = random_coefficients(16, 2, 0.3);
    EXPECT_LT(residual_K(c, c, 0.01, 0.0, CoefficientSet::passive(), b).norm(), 1e-14);
}

TEST(ResidualK, LinearJacobianMatchesDifferences) {
    const SineBasis b(4, 4);
    const CoefVector cp = random_coefficients(16, 3, 0.5);
    const CoefVector c = random_coefficients(16, 4, 0.5);
    auto K = [&](const CoefVector& v) { return residual_K(cp, v, 0.01, 1e-2, CoefficientSet::linear(), b); };
    // Independent central differences with a fixed step.
    Eigen::MatrixXd J(16, 16);
    for (int j = 0; j < 16; ++j) {
        CoefVector p = c, m = c;
        p[j] += 1e-5;
        m[j] -= 1e-5;
        J.col(j) = (K(p) - K(m)) / 2e-5;
    }
    EXPECT_LT((J - linear_jacobian(0.01, 1e-2, b)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ResidualK, LinearResidualIsAffine) {
    const SineBasis b(4, 4);
    const CoefVector cp = random_coefficients(16, 5, 0.5);
    const CoefVector c = random_coefficients(16, 6, 0.5);
    const CoefVector K0 = residual_K(cp, CoefVector::Zero(16), 0.01, 1e-2, CoefficientSet::linear(), b);
    const CoefVector K1 = residual_K(cp, c, 0.01, 1e-2, CoefficientSet::linear(), b);
    EXPECT_LT((K1 - K0 - linear_jacobian(0.01, 1e-2, b) * c).norm(), 1e-12);
}

TEST(ResidualK, CoercivityProbe) {
    // K(c).c >= (1/2 + beta^2/2 + dt beta)|c|^2 - (data terms) with the data
    // terms (|c_prev|^2 + beta^2 |grad c_prev|^2) / 2.
    const SineBasis b(4, 4);
    const CoefficientSet corey(2.0);
    const double dt = 0.01, b2 = 1e-2, beta = 0.1;
    const CoefVector cp = random_coefficients(16, 7, 0.4);
    const double data = 0.5 * (cp.squaredNorm() + b2 * spectral_gradient_squared(cp, b));
    for (int n = 0; n < 100; ++n) {
        const CoefVector c = random_coefficients(16, 100 + n, 10.0);
        const double lhs = residual_K(cp, c, dt, b2, corey, b).dot(c);
        EXPECT_GE(lhs, (0.5 + 0.5 * b2 + dt * beta) * c.squaredNorm() - data);
    }
}

TEST(ResidualK, QuadratureConvergesAtSecondOrder) {
    // The midpoint rule is exact for the mass and gradient terms but not for
    // the advective products, which converge at second order.
    const SineBasis b1(4, 4, 8), b2(4, 4, 16), b3(4, 4, 32);
    const CoefVector cp = random_coefficients(16, 8, 0.3);
    const CoefVector c = random_coefficients(16, 9, 0.3);
    for (const CoefficientSet& coeffs : {CoefficientSet::linear(), CoefficientSet(2.0)}) {
        const CoefVector k1 = residual_K(cp, c, 0.01, 1e-2, coeffs, b1);
        const CoefVector k2 = residual_K(cp, c, 0.01, 1e-2, coeffs, b2);
        const CoefVector k3 = residual_K(cp, c, 0.01, 1e-2, coeffs, b3);
        const double p = oracle::observed_order((k1 - k2).norm(), (k2 - k3).norm());
        EXPECT_GT(p, 1.8);
        EXPECT_LT((k2 - k3).norm(), 1e-3);
    }
}

TEST(SolveSlab, TrivialDynamicsKeepState) {
    const SineBasis b(4, 4);
    const CoefVector cp = random_coefficients(16, 10, 0.3);
    const SlabSolution s = solve_slab(cp, 0.01, 0.0, CoefficientSet::passive(), b);
    EXPECT_EQ(s.iterations, 0);
    EXPECT_LT((s.c - cp).norm(), 1e-14);
}

TEST(SolveSlab, LinearConvergesInTwoIterations) {
    const SineBasis b(4, 4);
    const CoefVector cp = random_coefficients(16, 11, 0.3);
    const SlabSolution s = solve_slab(cp, 0.01, 1e-2, CoefficientSet::linear(), b);
    EXPECT_LE(s.iterations, 2);
    EXPECT_LE(s.residual, 1e-10);
    // Affine residual: the solution solves J c = J cp - K(cp).
    const Eigen::MatrixXd J = linear_jacobian(0.01, 1e-2, b);
    const CoefVector r0 = residual_K(cp, cp, 0.01, 1e-2, CoefficientSet::linear(), b);
    EXPECT_LT((s.c - (cp - J.partialPivLu().solve(r0))).norm(), 1e-10);
}

TEST(SolveSlab, NonlinearResidualBelowTolerance) {
    const SineBasis b(4, 4);
    const InitialCondition ic = InitialCondition::bump(0.8);
    const CoefVector c0 = project_initial([&](double x, double z) { return ic.eval(x, z); }, b);
    const GalerkinTrajectory t = run_galerkin(c0, 0.005, 20, 1e-2, CoefficientSet(2.0), b);
    ASSERT_EQ(t.coefficients.size(), 21u);
    for (double r : t.residuals) EXPECT_LE(r, 1e-10);
    const EnergyReport e = check_energy_estimate(t, b, 1e-8);
    EXPECT_TRUE(e.pass) << to_text(e);
}

TEST(SolveSlab, StagnationReported) {
    const SineBasis b(4, 4);
    NewtonOptions opt;
    opt.max_iterations = 0;
    EXPECT_THROW(solve_slab(random_coefficients(16, 12, 0.3), 0.01, 1e-2, CoefficientSet(2.0), b, opt),
                 GalerkinError);
}

TEST(EnergyEstimate, ZeroDataPasses) {
    const SineBasis b(4, 4);
    const GalerkinTrajectory t = run_galerkin(CoefVector::Zero(16), 0.01, 5, 1e-2, CoefficientSet(2.0), b);
    const EnergyReport e = check_energy_estimate(t, b);
    EXPECT_TRUE(e.pass);
    EXPECT_EQ(e.initial_energy, 0.0);
}

TEST(EnergyEstimate, TrivialDynamicsKeepEnergy) {
    const SineBasis b(4, 4);
    CoefVector c = CoefVector::Zero(16);
    c[5] = 0.7;
    const GalerkinTrajectory t = run_galerkin(c, 0.01, 5, 0.0, CoefficientSet::passive(), b);
    const EnergyReport e = check_energy_estimate(t, b);
    EXPECT_TRUE(e.pass);
    for (double v : e.lhs) EXPECT_NEAR(v, 0.49, 1e-14);
}

TEST(IncrementEstimate, TrivialIsVacuous) {
    const SineBasis b(4, 4);
    CoefVector c = CoefVector::Zero(16);
    c[0] = 0.5;
    std::vector<GalerkinTrajectory> runs;
    for (double dt : {0.02, 0.01}) runs.push_back(run_galerkin(c, dt, 2, 0.0, CoefficientSet::passive(), b));
    const IncrementReport r = check_increment_estimate(runs, b);
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.vacuous);
}

TEST(IncrementEstimate, LinearSlopeNearTwo) {
    const SineBasis b(4, 4);
    const InitialCondition ic = InitialCondition::bump(0.8);
    const CoefVector c0 = project_initial([&](double x, double z) { return ic.eval(x, z); }, b);
    std::vector<GalerkinTrajectory> runs;
    for (double dt : {0.02, 0.01, 0.005, 0.0025, 0.00125})
        runs.push_back(run_galerkin(c0, dt, static_cast<int>(std::lround(0.04 / dt)), 1e-2,
                                    CoefficientSet::linear(), b));
    const IncrementReport r = check_increment_estimate(runs, b);
    EXPECT_TRUE(r.pass) << to_text(r);
    EXPECT_GE(r.slope, 1.8);
    EXPECT_LE(r.slope, 2.2);
}

TEST(LogLog, SlopeOfPowerLaw) {
    EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-12);
    EXPECT_THROW(loglog_slope({1}, {1}), std::invalid_argument);
}
