#pragma once

/// \file
/// Matrix-free preconditioned conjugate gradients (Jacobi by default).

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bve {

/// Symmetric positive-definite operator given by its action and diagonal.
struct LinearOperator {
    std::size_t size = 0;
    std::function<void(std::span<const double>, std::span<double>)> apply;
    std::vector<double> diagonal;
    /// Optional SPD preconditioner z = M^{-1} r. Jacobi (the diagonal) is
    /// used when empty.
    std::function<void(std::span<const double>, std::span<double>)> precondition;
    bool symmetric = true;
    /// Set when every row is diagonally dominant with a positive diagonal
    /// (Gershgorin certificate computed at assembly).
    bool positive_certificate = false;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> residual_history;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, SolveStats stats, std::vector<double> last_iterate = {})
        : std::runtime_error(what), stats_(std::move(stats)), last_iterate_(std::move(last_iterate)) {}
    const SolveStats& stats() const noexcept { return stats_; }
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    SolveStats stats_;
    std::vector<double> last_iterate_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

/// Solves A x = rhs to ||A x - rhs|| <= tol ||rhs||, starting from x0.
/// Throws SolverError when `max_iterations` is exhausted.
inline std::vector<double> cg_solve(const LinearOperator& A, std::span<const double> rhs,
                                    std::span<const double> x0, double tol, int max_iterations,
                                    SolveStats* stats_out = nullptr) {
    const std::size_t n = A.size;
    if (rhs.size() != n || x0.size() != n || A.diagonal.size() != n)
        throw std::invalid_argument("cg_solve: size mismatch");

    SolveStats stats;
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> r(n), z(n), p(n), q(n);

    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    A.apply(x, q);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - q[k];
    double res = std::sqrt(dot(r, r));
    stats.residual_history.push_back(res);
    const double target = tol * rhs_norm;

    auto finish = [&] {
        stats.relative_residual = rhs_norm > 0.0 ? res / rhs_norm : res;
        if (stats_out) *stats_out = stats;
        return x;
    };
    if (res <= target) return finish();

    auto apply_preconditioner = [&] {
        if (A.precondition) A.precondition(r, z);
        else
            for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / A.diagonal[k];
    };
    apply_preconditioner();
    p = z;
    double rz = dot(r, z);
    while (stats.iterations < max_iterations) {
        A.apply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) throw SolverError("cg_solve: operator not positive definite", stats);
        const double alpha = rz / pq;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        ++stats.iterations;
        res = std::sqrt(dot(r, r));
        stats.residual_history.push_back(res);
        if (res <= target) return finish();
        apply_preconditioner();
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    stats.relative_residual = rhs_norm > 0.0 ? res / rhs_norm : res;
    if (stats_out) *stats_out = stats;
    throw SolverError("cg_solve: no convergence after " + std::to_string(max_iterations) +
                          " iterations, relative residual " +
                          std::to_string(stats.relative_residual),
                      stats, std::move(x));
}

}  // namespace bve
