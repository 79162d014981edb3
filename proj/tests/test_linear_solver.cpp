#include <bve/fv_solver.hpp>
#include <bve/linear_solver.hpp>

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace bve;

namespace {

LinearOperator diagonal_operator(std::vector<double> d) {
    LinearOperator A;
    A.size = d.size();
    A.diagonal = d;
    A.apply = [d](std::span<const double> v, std::span<double> out) {
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = d[k] * v[k];
    };
    return A;
}

// 1-D Dirichlet Poisson -u'' = f, scaled by h^2: tridiag(-1, 2, -1).
LinearOperator poisson_1d(std::size_t n) {
    LinearOperator A;
    A.size = n;
    A.diagonal.assign(n, 2.0);
    A.apply = [n](std::span<const double> v, std::span<double> out) {
        for (std::size_t k = 0; k < n; ++k) {
            out[k] = 2.0 * v[k];
            if (k > 0) out[k] -= v[k - 1];
            if (k + 1 < n) out[k] -= v[k + 1];
        }
    };
    return A;
}

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST(LinearSolver, Identity) {
    const std::vector<double> rhs = random_vector(10, 1);
    SolveStats st;
    const auto x = cg_solve(diagonal_operator(std::vector<double>(10, 1.0)), rhs, std::vector<double>(10, 0.0), 1e-12,
                            100, &st);
    EXPECT_EQ(st.iterations, 1);
    for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(x[k], rhs[k], 1e-15);
}

TEST(LinearSolver, DiagonalOneIteration) {
    const std::vector<double> d{1.0, 4.0, 9.0, 0.5, 2.0};
    const std::vector<double> rhs = random_vector(5, 2);
    SolveStats st;
    const auto x = cg_solve(diagonal_operator(d), rhs, std::vector<double>(5, 0.0), 1e-12, 100, &st);
    EXPECT_EQ(st.iterations, 1);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(x[k], rhs[k] / d[k], 1e-14);
}

TEST(LinearSolver, PoissonAgainstThomas) {
    const std::size_t n = 64;
    const std::vector<double> rhs = random_vector(n, 3);
    SolveStats st;
    const auto x = cg_solve(poisson_1d(n), rhs, std::vector<double>(n, 0.0), 1e-13, 1000, &st);
    const auto ref = oracle::thomas(std::vector<double>(n, -1.0), std::vector<double>(n, 2.0),
                                    std::vector<double>(n, -1.0), rhs);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(x[k], ref[k], 1e-9);
    EXPECT_LT(st.residual_history.back(), st.residual_history.front());
}

TEST(LinearSolver, EnergyErrorNonIncreasing) {
    // The Euclidean residual of CG may grow between iterations; the A-norm
    // of the error is the monotone quantity.
    const std::size_t n = 48;
    const LinearOperator A = poisson_1d(n);
    const std::vector<double> rhs = random_vector(n, 6);
    const auto exact = oracle::thomas(std::vector<double>(n, -1.0), std::vector<double>(n, 2.0),
                                      std::vector<double>(n, -1.0), rhs);
    auto energy_error = [&](const std::vector<double>& x) {
        std::vector<double> e(n), Ae(n);
        for (std::size_t k = 0; k < n; ++k) e[k] = x[k] - exact[k];
        A.apply(e, Ae);
        return dot(e, Ae);
    };
    double prev = energy_error(std::vector<double>(n, 0.0));
    for (int k = 1; k < 40; ++k) {
        try {
            cg_solve(A, rhs, std::vector<double>(n, 0.0), 1e-14, k);
            break;
        } catch (const SolverError& e) {
            const double now = energy_error(e.last_iterate());
            EXPECT_LE(now, prev * (1.0 + 1e-10)) << k;
            prev = now;
        }
    }
}

TEST(LinearSolver, IterationCapThrows) {
    const std::size_t n = 64;
    const std::vector<double> rhs = random_vector(n, 4);
    try {
        cg_solve(poisson_1d(n), rhs, std::vector<double>(n, 0.0), 1e-14, 3);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.stats().iterations, 3);
        EXPECT_GT(e.stats().relative_residual, 1e-14);
    }
}

TEST(LinearSolver, IndefiniteDetected) {
    EXPECT_THROW(cg_solve(diagonal_operator({1.0, -1.0}), std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0},
                          1e-12, 10),
                 SolverError);
}

TEST(LinearSolver, SizeMismatch) {
    EXPECT_THROW(cg_solve(diagonal_operator({1.0, 1.0}), std::vector<double>{1.0}, std::vector<double>{0.0, 0.0}, 1e-12,
                          10),
                 std::invalid_argument);
}

class ImplicitOperatorTest : public ::testing::TestWithParam<BoundaryMode> {};

TEST_P(ImplicitOperatorTest, SymmetricPositiveAndGuessIndependent) {
    const Grid g(40, 8);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScalarField S(g);
    for (double& v : S.values()) v = u(rng);
    const CoefficientSet coeffs(2.0);
    BoundaryConditions bc{GetParam(), {}};
    if (GetParam() == BoundaryMode::experiment) bc.inflow.assign(8, 0.9);
    const LinearOperator A = implicit_operator(S, 1e-3, 1e-2, coeffs, bc, DiffusionModel::nonlinear);
    EXPECT_TRUE(A.positive_certificate);

    const auto v = random_vector(g.size(), 10), w = random_vector(g.size(), 11);
    std::vector<double> Av(g.size()), Aw(g.size());
    A.apply(v, Av);
    A.apply(w, Aw);
    EXPECT_NEAR(dot(Av, w), dot(v, Aw), 1e-10 * std::abs(dot(Av, w)));
    EXPECT_GT(dot(Av, v), 0.0);

    const auto rhs = random_vector(g.size(), 12);
    const double tol = 1e-10;
    const auto x1 = cg_solve(A, rhs, std::vector<double>(g.size(), 0.0), tol, 1000);
    const auto x2 = cg_solve(A, rhs, random_vector(g.size(), 13), tol, 1000);
    double diff = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        diff = std::max(diff, std::abs(x1[k] - x2[k]));
        norm = std::max(norm, std::abs(x1[k]));
    }
    EXPECT_LE(diff / norm, 10 * tol);
}

TEST_P(ImplicitOperatorTest, LinePreconditionerMatchesJacobiSolution) {
    const Grid g(40, 8);
    const ScalarField S(g, 0.4);
    BoundaryConditions bc{GetParam(), {}};
    if (GetParam() == BoundaryMode::experiment) bc.inflow.assign(8, 0.9);
    LinearOperator A = implicit_operator(S, 1e-3, 1e-2, CoefficientSet(2.0), bc, DiffusionModel::unit);
    const auto rhs = random_vector(g.size(), 14);
    SolveStats line_stats, jacobi_stats;
    const auto x1 = cg_solve(A, rhs, std::vector<double>(g.size(), 0.0), 1e-12, 1000, &line_stats);
    A.precondition = nullptr;
    const auto x2 = cg_solve(A, rhs, std::vector<double>(g.size(), 0.0), 1e-12, 1000, &jacobi_stats);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(x1[k], x2[k], 1e-9);
    EXPECT_LT(line_stats.iterations, jacobi_stats.iterations);
}

INSTANTIATE_TEST_SUITE_P(Modes, ImplicitOperatorTest,
                         ::testing::Values(BoundaryMode::experiment, BoundaryMode::analysis, BoundaryMode::closed));
