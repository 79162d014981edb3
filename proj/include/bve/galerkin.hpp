#pragma once

/// \file
/// Sine-basis Galerkin discretisation of the analysis problem (homogeneous
/// Dirichlet data, unit diffusion) with one implicit Euler slab per step.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "grid.hpp"
#include "velocity.hpp"

namespace bve {

using CoefVector = Eigen::VectorXd;

/// Orthonormal tensor basis w_{k,l}(x,z) = 2 sin(k pi x) sin(l pi z) with
/// 1 <= k <= mx, 1 <= l <= mz. Coefficient index is (k-1) * mz + (l-1).
///
/// Integrals are evaluated by the tensor midpoint rule on a grid with
/// `quad_factor` nodes per mode in each direction; on that grid discrete
/// sine orthogonality is exact.
class SineBasis {
public:
    SineBasis(int mx, int mz, int quad_factor = 16)
        : mx_(mx), mz_(mz), quad_factor_(quad_factor) {
        if (mx < 1 || mz < 1) throw std::invalid_argument("SineBasis: mode counts must be >= 1");
        if (quad_factor < 8) throw std::invalid_argument("SineBasis: quadrature factor must be >= 8");
        tabulate(nqx(), mx_, phi_x_, dphi_x_);
        tabulate(nqz(), mz_, phi_z_, dphi_z_);
        grad_weight_.resize(size());
        for (int k = 1; k <= mx_; ++k)
            for (int l = 1; l <= mz_; ++l)
                grad_weight_[index(k, l)] = std::numbers::pi * std::numbers::pi * (k * k + l * l);
    }

    int mx() const noexcept { return mx_; }
    int mz() const noexcept { return mz_; }
    int quad_factor() const noexcept { return quad_factor_; }
    int size() const noexcept { return mx_ * mz_; }
    int index(int k, int l) const noexcept { return (k - 1) * mz_ + (l - 1); }
    int nqx() const noexcept { return quad_factor_ * mx_; }
    int nqz() const noexcept { return quad_factor_ * mz_; }
    Grid quadrature_grid() const { return Grid(nqx(), nqz()); }

    /// ||grad w_i||^2 = pi^2 (k^2 + l^2).
    const Eigen::VectorXd& gradient_weights() const noexcept { return grad_weight_; }

    double eval(const CoefVector& c, double x, double z) const {
        double s = 0.0;
        for (int k = 1; k <= mx_; ++k) {
            const double sx = std::sin(k * std::numbers::pi * x);
            for (int l = 1; l <= mz_; ++l) s += c[index(k, l)] * 2.0 * sx * std::sin(l * std::numbers::pi * z);
        }
        return s;
    }

    /// Values at the quadrature nodes, rows x and columns z.
    Eigen::MatrixXd nodal(const CoefVector& c) const {
        return phi_x_.transpose() * coefficient_matrix(c) * phi_z_;
    }
    Eigen::MatrixXd nodal_dx(const CoefVector& c) const {
        return dphi_x_.transpose() * coefficient_matrix(c) * phi_z_;
    }
    Eigen::MatrixXd nodal_dz(const CoefVector& c) const {
        return phi_x_.transpose() * coefficient_matrix(c) * dphi_z_;
    }

    /// Midpoint-rule (F, w_i) for nodal values F.
    CoefVector test(const Eigen::MatrixXd& F) const { return flatten(phi_x_ * F * phi_z_.transpose() * cell()); }
    /// Midpoint-rule (F, d_x w_i).
    CoefVector test_dx(const Eigen::MatrixXd& F) const { return flatten(dphi_x_ * F * phi_z_.transpose() * cell()); }
    /// Midpoint-rule (F, d_z w_i).
    CoefVector test_dz(const Eigen::MatrixXd& F) const { return flatten(phi_x_ * F * dphi_z_.transpose() * cell()); }

    /// Gram matrix (w_i, w_j) under the quadrature.
    Eigen::MatrixXd gram() const {
        const Eigen::MatrixXd gx = phi_x_ * phi_x_.transpose() / nqx();
        const Eigen::MatrixXd gz = phi_z_ * phi_z_.transpose() / nqz();
        return kron(gx, gz);
    }

    /// Matrix of (w_j, d_x w_i), indexed (i, j).
    Eigen::MatrixXd advection_x() const {
        const Eigen::MatrixXd bx = dphi_x_ * phi_x_.transpose() / nqx();
        const Eigen::MatrixXd gz = phi_z_ * phi_z_.transpose() / nqz();
        return kron(bx, gz);
    }

private:
    static void tabulate(int nq, int m, Eigen::MatrixXd& phi, Eigen::MatrixXd& dphi) {
        phi.resize(m, nq);
        dphi.resize(m, nq);
        const double root2 = std::numbers::sqrt2;
        for (int k = 1; k <= m; ++k) {
            const double w = k * std::numbers::pi;
            for (int a = 0; a < nq; ++a) {
                const double x = (a + 0.5) / nq;
                phi(k - 1, a) = root2 * std::sin(w * x);
                dphi(k - 1, a) = root2 * w * std::cos(w * x);
            }
        }
    }

    static Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j)
                out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return out;
    }

    double cell() const noexcept { return 1.0 / (static_cast<double>(nqx()) * nqz()); }

    Eigen::MatrixXd coefficient_matrix(const CoefVector& c) const {
        if (c.size() != size()) throw std::invalid_argument("SineBasis: coefficient size mismatch");
        Eigen::MatrixXd C(mx_, mz_);
        for (int k = 0; k < mx_; ++k)
            for (int l = 0; l < mz_; ++l) C(k, l) = c[k * mz_ + l];
        return C;
    }

    CoefVector flatten(const Eigen::MatrixXd& C) const {
        CoefVector c(size());
        for (int k = 0; k < mx_; ++k)
            for (int l = 0; l < mz_; ++l) c[k * mz_ + l] = C(k, l);
        return c;
    }

    int mx_, mz_, quad_factor_;
    Eigen::MatrixXd phi_x_, dphi_x_, phi_z_, dphi_z_;
    Eigen::VectorXd grad_weight_;
};

/// L2 projection of an analytic datum, by 30-point Gauss-Legendre in each
/// direction on `panels` equal sub-intervals.
inline CoefVector project_initial(const std::function<double(double, double)>& S0, const SineBasis& basis,
                                  int panels = 8) {
    using Rule = boost::math::quadrature::gauss<double, 30>;
    std::vector<double> nodes, weights;
    const auto& abscissa = Rule::abscissa();
    const auto& w = Rule::weights();
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) / panels;
        const double half = 0.5 / panels;
        for (std::size_t q = 0; q < abscissa.size(); ++q) {
            nodes.push_back(mid + half * abscissa[q]);
            weights.push_back(half * w[q]);
            if (abscissa[q] != 0.0) {
                nodes.push_back(mid - half * abscissa[q]);
                weights.push_back(half * w[q]);
            }
        }
    }
    CoefVector c = CoefVector::Zero(basis.size());
    const int n = static_cast<int>(nodes.size());
    Eigen::MatrixXd values(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) values(a, b) = S0(nodes[a], nodes[b]) * weights[a] * weights[b];
    for (int k = 1; k <= basis.mx(); ++k) {
        for (int l = 1; l <= basis.mz(); ++l) {
            double s = 0.0;
            for (int a = 0; a < n; ++a) {
                const double sx = std::sin(k * std::numbers::pi * nodes[a]);
                double row = 0.0;
                for (int b = 0; b < n; ++b) row += values(a, b) * std::sin(l * std::numbers::pi * nodes[b]);
                s += sx * row;
            }
            c[basis.index(k, l)] = 2.0 * s;
        }
    }
    return c;
}

/// L2 projection of cell averages on a finite-volume grid (midpoint rule).
inline CoefVector project_initial(const ScalarField& S0, const SineBasis& basis) {
    const Grid& g = S0.grid();
    CoefVector c = CoefVector::Zero(basis.size());
    for (int k = 1; k <= basis.mx(); ++k)
        for (int l = 1; l <= basis.mz(); ++l) {
            double s = 0.0;
            for (int i = 0; i < g.nx(); ++i) {
                const double sx = std::sin(k * std::numbers::pi * g.x(i));
                for (int j = 0; j < g.nz(); ++j) s += S0(i, j) * sx * std::sin(l * std::numbers::pi * g.z(j));
            }
            c[basis.index(k, l)] = 2.0 * s * g.cell_area();
        }
    return c;
}

/// Point values of the Galerkin function at the cell centres of `grid`.
inline ScalarField reconstruct(const CoefVector& c, const SineBasis& basis, const Grid& grid) {
    return ScalarField::sample(grid, [&](double x, double z) { return basis.eval(c, x, z); });
}

/// Residual vector field of one implicit Euler slab,
///   K_i(c) = (S - S_prev, w_i) - dt (f(S) U, d_x w_i) - dt (f(S) W, d_z w_i)
///            + dt beta (grad S, grad w_i) + beta^2 (grad (S - S_prev), grad w_i),
/// with U, W the nonlocal velocities of S on the quadrature grid.
inline CoefVector residual_K(const CoefVector& c_prev, const CoefVector& c, double dt, double beta2,
                             const CoefficientSet& coeffs, const SineBasis& basis) {
    const double beta = std::sqrt(beta2);
    const Grid q = basis.quadrature_grid();
    const Eigen::MatrixXd S = basis.nodal(c);

    ScalarField field(q);
    for (int i = 0; i < q.nx(); ++i)
        for (int j = 0; j < q.nz(); ++j) field(i, j) = S(i, j);
    const VelocityField V = compute_velocity(field, coeffs, BoundaryConditions::analysis());

    Eigen::MatrixXd fu(q.nx(), q.nz()), fw(q.nx(), q.nz());
    for (int i = 0; i < q.nx(); ++i)
        for (int j = 0; j < q.nz(); ++j) {
            const double f = coeffs.frac_flow(coeffs.to_domain(S(i, j)));
            fu(i, j) = f * V.U(i, j);
            fw(i, j) = f * V.w_center(i, j);
        }

    const Eigen::VectorXd& g = basis.gradient_weights();
    CoefVector K = (c - c_prev) - dt * (basis.test_dx(fu) + basis.test_dz(fw));
    K += (dt * beta + beta2) * g.cwiseProduct(c) - beta2 * g.cwiseProduct(c_prev);
    return K;
}

/// Central-difference Jacobian of a vector field.
inline Eigen::MatrixXd fd_jacobian(const std::function<CoefVector(const CoefVector&)>& F, const CoefVector& c,
                                   double h = 1e-6) {
    const int n = static_cast<int>(c.size());
    Eigen::MatrixXd J(n, n);
    CoefVector p = c;
    for (int j = 0; j < n; ++j) {
        const double step = h * std::max(1.0, std::abs(c[j]));
        p[j] = c[j] + step;
        const CoefVector plus = F(p);
        p[j] = c[j] - step;
        const CoefVector minus = F(p);
        p[j] = c[j];
        J.col(j) = (plus - minus) / (2.0 * step);
    }
    return J;
}

/// Assembled Jacobian of K for the linear reference model (f(s) = s,
/// constant mobility, so U = 1 and W = 0).
inline Eigen::MatrixXd linear_jacobian(double dt, double beta2, const SineBasis& basis) {
    const double beta = std::sqrt(beta2);
    Eigen::MatrixXd J = basis.gram() - dt * basis.advection_x();
    J.diagonal() += (dt * beta + beta2) * basis.gradient_weights();
    return J;
}

class GalerkinError : public std::runtime_error {
public:
    GalerkinError(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

struct SlabSolution {
    CoefVector c;
    int iterations = 0;
    double residual = 0.0;
};

struct NewtonOptions {
    double tolerance = 1e-10;
    int max_iterations = 50;
    int max_halvings = 10;
};

/// Zero of K by damped Newton with a finite-difference Jacobian, started
/// from c_prev.
inline SlabSolution solve_slab(const CoefVector& c_prev, double dt, double beta2, const CoefficientSet& coeffs,
                               const SineBasis& basis, const NewtonOptions& opt = {}) {
    auto K = [&](const CoefVector& c) { return residual_K(c_prev, c, dt, beta2, coeffs, basis); };
    SlabSolution sol{c_prev, 0, 0.0};
    CoefVector r = K(sol.c);
    sol.residual = r.norm();
    while (sol.residual > opt.tolerance) {
        if (sol.iterations == opt.max_iterations)
            throw GalerkinError("solve_slab: Newton did not converge in " + std::to_string(opt.max_iterations) +
                                    " iterations",
                                sol.residual);
        const Eigen::MatrixXd J = fd_jacobian(K, sol.c);
        const CoefVector delta = J.partialPivLu().solve(-r);
        if (!delta.allFinite()) throw GalerkinError("solve_slab: singular Jacobian", sol.residual);
        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, alpha *= 0.5) {
            const CoefVector trial = sol.c + alpha * delta;
            const CoefVector r_trial = K(trial);
            if (r_trial.norm() < sol.residual) {
                sol.c = trial;
                r = r_trial;
                sol.residual = r_trial.norm();
                accepted = true;
                break;
            }
        }
        ++sol.iterations;
        if (!accepted) throw GalerkinError("solve_slab: Newton stagnated", sol.residual);
    }
    return sol;
}

struct GalerkinTrajectory {
    double dt = 0.0;
    double beta2 = 0.0;
    /// coefficients[0] is the initial projection.
    std::vector<CoefVector> coefficients;
    std::vector<int> newton_iterations;
    std::vector<double> residuals;
};

inline GalerkinTrajectory run_galerkin(const CoefVector& c0, double dt, int slabs, double beta2,
                                       const CoefficientSet& coeffs, const SineBasis& basis,
                                       const NewtonOptions& opt = {}) {
    GalerkinTrajectory traj{dt, beta2, {c0}, {}, {}};
    for (int n = 0; n < slabs; ++n) {
        SlabSolution s = solve_slab(traj.coefficients.back(), dt, beta2, coeffs, basis, opt);
        traj.coefficients.push_back(std::move(s.c));
        traj.newton_iterations.push_back(s.iterations);
        traj.residuals.push_back(s.residual);
    }
    return traj;
}

inline double spectral_l2_squared(const CoefVector& c) { return c.squaredNorm(); }

inline double spectral_gradient_squared(const CoefVector& c, const SineBasis& basis) {
    return basis.gradient_weights().dot(c.cwiseProduct(c));
}

struct EnergyReport {
    bool pass = true;
    double initial_energy = 0.0;
    /// E0 (1 + eps) - max_n (E_n + 2 beta dt sum_{k<=n} ||grad S^k||^2).
    double margin = 0.0;
    std::vector<double> lhs;
    /// sup_n E_n + beta dt sum_n ||grad S^n||^2, the time-continuous form.
    double integral_form = 0.0;
};

/// Checks E_n + 2 beta dt sum_{k<=n} ||grad S^k||^2 <= E_0 (1 + eps) for all n,
/// with E = ||S||^2 + beta^2 ||grad S||^2 computed by Parseval.
inline EnergyReport check_energy_estimate(const GalerkinTrajectory& traj, const SineBasis& basis,
                                          double eps = 1e-8) {
    const double beta = std::sqrt(traj.beta2);
    auto E = [&](const CoefVector& c) {
        return spectral_l2_squared(c) + traj.beta2 * spectral_gradient_squared(c, basis);
    };
    EnergyReport rep;
    rep.initial_energy = E(traj.coefficients.front());
    const double bound = rep.initial_energy * (1.0 + eps);
    double dissipation = 0.0;
    double sup = rep.initial_energy;
    double worst = rep.initial_energy;
    rep.lhs.push_back(rep.initial_energy);
    for (std::size_t n = 1; n < traj.coefficients.size(); ++n) {
        const CoefVector& c = traj.coefficients[n];
        dissipation += traj.dt * spectral_gradient_squared(c, basis);
        const double e = E(c);
        sup = std::max(sup, e);
        const double lhs = e + 2.0 * beta * dissipation;
        rep.lhs.push_back(lhs);
        worst = std::max(worst, lhs);
        if (lhs > bound) rep.pass = false;
    }
    rep.margin = bound - worst;
    rep.integral_form = sup + beta * dissipation;
    return rep;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double lx = std::log(x[k]);
        const double ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// max_n ||S^n - S^{n-1}||^2 + beta^2 ||grad (S^n - S^{n-1})||^2.
inline double max_increment(const GalerkinTrajectory& traj, const SineBasis& basis) {
    double worst = 0.0;
    for (std::size_t n = 1; n < traj.coefficients.size(); ++n) {
        const CoefVector d = traj.coefficients[n] - traj.coefficients[n - 1];
        worst = std::max(worst, spectral_l2_squared(d) + traj.beta2 * spectral_gradient_squared(d, basis));
    }
    return worst;
}

struct IncrementReport {
    bool pass = true;
    bool vacuous = false;
    std::vector<double> dt;
    std::vector<double> increment;
    double slope = std::numeric_limits<double>::quiet_NaN();
    /// max over runs of increment * beta^2 / dt^2.
    double empirical_constant = 0.0;
};

/// Fits the increment energy against dt over runs that differ only in dt.
/// Passes when the slope lies in [lo, hi], or vacuously when every
/// increment is zero.
inline IncrementReport check_increment_estimate(const std::vector<GalerkinTrajectory>& runs,
                                                const SineBasis& basis, double lo = 1.8, double hi = 2.2) {
    IncrementReport rep;
    bool all_zero = true;
    for (const GalerkinTrajectory& t : runs) {
        const double inc = max_increment(t, basis);
        rep.dt.push_back(t.dt);
        rep.increment.push_back(inc);
        if (inc > 0.0) all_zero = false;
        rep.empirical_constant = std::max(rep.empirical_constant, inc * t.beta2 / (t.dt * t.dt));
    }
    if (all_zero) {
        rep.vacuous = true;
        return rep;
    }
    rep.slope = loglog_slope(rep.dt, rep.increment);
    rep.pass = rep.slope >= lo && rep.slope <= hi;
    return rep;
}

inline std::string to_text(const EnergyReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << "energy estimate: " << (r.pass ? "PASS" : "FAIL") << " E0=" << r.initial_energy
       << " margin=" << r.margin << " integral_form=" << r.integral_form << '\n';
    return os.str();
}

inline std::string to_text(const IncrementReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << "increment estimate: " << (r.pass ? "PASS" : "FAIL");
    if (r.vacuous) os << " (all increments zero)";
    else os << " slope=" << r.slope << " C=" << r.empirical_constant;
    os << '\n';
    for (std::size_t k = 0; k < r.dt.size(); ++k) os << "  dt=" << r.dt[k] << " increment=" << r.increment[k] << '\n';
    return os.str();
}

}  // namespace bve
