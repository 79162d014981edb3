#pragma once

/// \file
/// Finite-volume IMEX stepper for
///
///   dS/dt + div(f(S) V[S]) - beta div(H(S) grad S) - beta^2 lap dS/dt = 0
///
/// with the nonlocal velocity V = (U, W). Advection is explicit first-order
/// upwind; diffusion (coefficients frozen at the old state) and the
/// pseudo-parabolic term are implicit. Each step solves
///
///   [I - beta^2 lap_h + dt beta L_H(S^n)] (S^{n+1} - S^n)
///       = -dt div_h(f(S^n) V^n) - dt beta L_H(S^n) S^n
///
/// for the increment, where L_H(S) = -div_h(H(S) grad_h .) with face
/// diffusivities by arithmetic mean. beta^2 = 0 gives the explicit
/// transport scheme.
///
/// The time discretisation is a reconstruction of a practical scheme for
/// this model; it is first-order in time.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "diagnostics.hpp"
#include "grid.hpp"
#include "initial_condition.hpp"
#include "linear_solver.hpp"
#include "velocity.hpp"

namespace bve {

/// `nonlinear` uses H(S) of the coefficient set, `unit` uses H = 1.
enum class DiffusionModel { nonlinear, unit };

struct SimConfig {
    int nx = 500;
    int nz = 20;
    double beta2 = 1e-2;
    double viscosity_ratio = 2.0;
    double end_time = 0.5;
    double cfl = 0.5;
    BoundaryMode bc_mode = BoundaryMode::experiment;
    double dt_max = 1e-2;
    double solver_tol = 1e-10;
    bool clamp = false;
    DiffusionModel diffusion = DiffusionModel::nonlinear;
    /// Empty means {0.1, 0.25, 0.5} * end_time. The initial state and the
    /// final time are always recorded.
    std::vector<double> snapshot_times;
    InitialCondition initial;

    void validate() const {
        auto fail = [](const std::string& key, const std::string& why) {
            throw std::invalid_argument(key + ": " + why);
        };
        if (nx < Grid::min_cells) fail("nx", "must be >= 4");
        if (nz < Grid::min_cells) fail("nz", "must be >= 4");
        if (!(beta2 >= 0.0) || !std::isfinite(beta2)) fail("beta2", "must be >= 0");
        if (!(viscosity_ratio > 0.0) || !std::isfinite(viscosity_ratio))
            fail("viscosity_ratio", "must be > 0");
        if (!(end_time > 0.0) || !std::isfinite(end_time)) fail("end_time", "must be > 0");
        if (!(cfl > 0.0 && cfl <= 1.0)) fail("cfl", "must be in (0, 1]");
        if (!(dt_max > 0.0) || !std::isfinite(dt_max)) fail("dt_max", "must be > 0");
        if (!(solver_tol > 0.0 && solver_tol < 1.0)) fail("solver_tol", "must be in (0, 1)");
        for (double t : snapshot_times)
            if (!(t >= 0.0 && t <= end_time)) fail("snapshot_times", "entries must lie in [0, end_time]");
    }

    double beta() const { return std::sqrt(beta2); }

    std::vector<double> snapshot_schedule() const {
        std::vector<double> times = snapshot_times;
        if (times.empty()) times = {0.1 * end_time, 0.25 * end_time, 0.5 * end_time};
        times.push_back(end_time);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        return times;
    }

    BoundaryConditions boundary(const Grid& grid, const InitialCondition& ic) const {
        switch (bc_mode) {
        case BoundaryMode::experiment: return BoundaryConditions::experiment(ic.inflow_profile(grid));
        case BoundaryMode::analysis: return BoundaryConditions::analysis();
        case BoundaryMode::closed: return BoundaryConditions::closed();
        }
        return BoundaryConditions::analysis();
    }
};

struct TimeStepState {
    double t = 0.0;
    ScalarField S;
    ScalarField S_prev;
    double dt_last = 0.0;
};

struct StepInfo {
    double dt = 0.0;
    int cg_iterations = 0;
    double cg_relative_residual = 0.0;
    double incompressibility_residual = 0.0;
};

class StepFailure : public std::runtime_error {
public:
    StepFailure(const std::string& what, double t, SolveStats stats)
        : std::runtime_error(what), t_(t), stats_(std::move(stats)) {}
    double time() const noexcept { return t_; }
    const SolveStats& stats() const noexcept { return stats_; }

private:
    double t_;
    SolveStats stats_;
};

/// Velocities on cell faces. ux has (nx + 1) * nz entries (face f between
/// cells f-1 and f, index f * nz + j); wz has nx * (nz + 1) entries (face f
/// between cells f-1 and f in z, index i * (nz + 1) + f).
///
/// Interior x-faces take the arithmetic mean of the adjacent cell values.
/// The two boundary x-faces use the linear extrapolation 2 U0 - 3/2 U1 +
/// 1/2 U2, which is the face value that reproduces the one-sided derivative
/// stencil used inside W; z-faces carry W directly and the walls carry 0.
/// With these choices the discrete face field is divergence-free cell by
/// cell up to rounding.
struct FaceVelocities {
    std::vector<double> ux;
    std::vector<double> wz;
    int nx = 0;
    int nz = 0;

    double u(int f, int j) const noexcept { return ux[static_cast<std::size_t>(f) * nz + j]; }
    double w(int i, int f) const noexcept { return wz[static_cast<std::size_t>(i) * (nz + 1) + f]; }

    double max_speed() const noexcept {
        double m = 0.0;
        for (double v : ux) m = std::max(m, std::abs(v));
        for (double v : wz) m = std::max(m, std::abs(v));
        return m;
    }
};

inline FaceVelocities face_velocities(const VelocityField& V, const BoundaryConditions& bc) {
    const Grid& g = V.U.grid();
    const int nx = g.nx();
    const int nz = g.nz();
    FaceVelocities fv;
    fv.nx = nx;
    fv.nz = nz;
    fv.ux.assign(static_cast<std::size_t>(nx + 1) * nz, 0.0);
    fv.wz.assign(static_cast<std::size_t>(nx) * (nz + 1), 0.0);
    for (int j = 0; j < nz; ++j) {
        for (int f = 1; f < nx; ++f) fv.ux[f * nz + j] = 0.5 * (V.U(f - 1, j) + V.U(f, j));
        if (bc.periodic_x()) {
            const double wrap = 0.5 * (V.U(nx - 1, j) + V.U(0, j));
            fv.ux[j] = wrap;
            fv.ux[static_cast<std::size_t>(nx) * nz + j] = wrap;
        } else {
            fv.ux[j] = 2.0 * V.U(0, j) - 1.5 * V.U(1, j) + 0.5 * V.U(2, j);
            fv.ux[static_cast<std::size_t>(nx) * nz + j] =
                2.0 * V.U(nx - 1, j) - 1.5 * V.U(nx - 2, j) + 0.5 * V.U(nx - 3, j);
        }
    }
    for (int i = 0; i < nx; ++i)
        for (int f = 1; f < nz; ++f) fv.wz[static_cast<std::size_t>(i) * (nz + 1) + f] = V.W(i, f - 1);
    return fv;
}

struct AdvectiveFluxes {
    ScalarField divergence;
    /// Net advective outflow through the boundary (integrated over faces).
    double boundary_outflow = 0.0;
};

/// Upwind discretisation of div(f(S) V). Boundary states: Dirichlet faces
/// use the boundary value, Neumann (outflow) faces use the interior value,
/// walls carry no flux.
inline AdvectiveFluxes advective_fluxes(const ScalarField& S, const VelocityField& V,
                                        const CoefficientSet& coeffs, const BoundaryConditions& bc) {
    const Grid& g = S.grid();
    bc.validate(g);
    const int nx = g.nx();
    const int nz = g.nz();
    const FaceVelocities fv = face_velocities(V, bc);
    auto flux_fn = [&](double s) { return coeffs.frac_flow(coeffs.to_domain(s)); };

    std::vector<double> fS(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) fS[k] = flux_fn(S[k]);
    auto fcell = [&](int i, int j) { return fS[g.index(i, j)]; };

    AdvectiveFluxes out{ScalarField(g), 0.0};
    const double idx = 1.0 / g.dx();
    const double idz = 1.0 / g.dz();

    for (int j = 0; j < nz; ++j) {
        for (int f = 0; f <= nx; ++f) {
            const double u = fv.u(f, j);
            double left, right;
            if (f == 0) {
                right = fcell(0, j);
                if (bc.periodic_x()) left = fcell(nx - 1, j);
                else left = bc.west() == SideKind::dirichlet ? flux_fn(bc.west_value(j)) : right;
            } else if (f == nx) {
                left = fcell(nx - 1, j);
                if (bc.periodic_x()) right = fcell(0, j);
                else right = bc.east() == SideKind::dirichlet ? flux_fn(0.0) : left;
            } else {
                left = fcell(f - 1, j);
                right = fcell(f, j);
            }
            const double flux = u > 0.0 ? u * left : u * right;
            if (f > 0) out.divergence(f - 1, j) += flux * idx;
            if (f < nx) out.divergence(f, j) -= flux * idx;
            if (!bc.periodic_x()) {
                if (f == 0) out.boundary_outflow -= flux * g.dz();
                if (f == nx) out.boundary_outflow += flux * g.dz();
            }
        }
    }
    for (int i = 0; i < nx; ++i) {
        for (int f = 1; f < nz; ++f) {
            const double w = fv.w(i, f);
            const double flux = w > 0.0 ? w * fcell(i, f - 1) : w * fcell(i, f);
            out.divergence(i, f - 1) += flux * idz;
            out.divergence(i, f) -= flux * idz;
        }
    }
    return out;
}

inline ScalarField advective_divergence(const ScalarField& S, const VelocityField& V,
                                        const CoefficientSet& coeffs, const BoundaryConditions& bc) {
    return advective_fluxes(S, V, coeffs, bc).divergence;
}

/// Directional CFL step: cfl / max_cells(L_f (|u|/dx + |w|/dz)), with |u|
/// and |w| the largest face speeds of the cell, capped by dt_max and by the
/// remaining time. Returns dt_max when the transport speed vanishes.
///
/// For cfl <= 1 and a divergence-free face field this keeps the explicit
/// upwind update a convex combination of neighbouring states.
inline double choose_dt(const TimeStepState& state, const SimConfig& cfg, const CoefficientSet& coeffs,
                        const VelocityField& V, const BoundaryConditions& bc) {
    const Grid& g = state.S.grid();
    const FaceVelocities fv = face_velocities(V, bc);
    double rate = 0.0;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.nz(); ++j) {
            const double u = std::max(std::abs(fv.u(i, j)), std::abs(fv.u(i + 1, j)));
            const double w = std::max(std::abs(fv.w(i, j)), std::abs(fv.w(i, j + 1)));
            rate = std::max(rate, u / g.dx() + w / g.dz());
        }
    rate *= coeffs.lipschitz_f();
    double dt = cfg.dt_max;
    if (rate > 0.0) dt = std::min(dt, cfg.cfl / rate);
    const double remaining = cfg.end_time - state.t;
    if (remaining > 0.0) dt = std::min(dt, remaining);
    return dt;
}

namespace detail {

// Face diffusivities of the frozen operator L_H(S^n). hx: (nx+1)*nz
// entries, hz: nx*(nz+1) entries; boundary faces that carry no diffusive
// coupling are zero.
struct FaceDiffusivity {
    std::vector<double> hx;
    std::vector<double> hz;
};

inline FaceDiffusivity face_diffusivity(const ScalarField& S, const CoefficientSet& coeffs,
                                        const BoundaryConditions& bc, DiffusionModel model) {
    const Grid& g = S.grid();
    const int nx = g.nx();
    const int nz = g.nz();
    auto H = [&](double s) {
        return model == DiffusionModel::unit ? 1.0 : coeffs.diffusion_H(coeffs.to_domain(s));
    };
    std::vector<double> hc(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) hc[k] = H(S[k]);
    auto hcell = [&](int i, int j) { return hc[g.index(i, j)]; };

    FaceDiffusivity d;
    d.hx.assign(static_cast<std::size_t>(nx + 1) * nz, 0.0);
    d.hz.assign(static_cast<std::size_t>(nx) * (nz + 1), 0.0);
    for (int j = 0; j < nz; ++j) {
        for (int f = 1; f < nx; ++f) d.hx[f * nz + j] = 0.5 * (hcell(f - 1, j) + hcell(f, j));
        if (bc.periodic_x()) {
            const double wrap = 0.5 * (hcell(nx - 1, j) + hcell(0, j));
            d.hx[j] = wrap;
            d.hx[static_cast<std::size_t>(nx) * nz + j] = wrap;
        } else {
            if (bc.west() == SideKind::dirichlet) d.hx[j] = 0.5 * (hcell(0, j) + H(bc.west_value(j)));
            if (bc.east() == SideKind::dirichlet)
                d.hx[static_cast<std::size_t>(nx) * nz + j] = 0.5 * (hcell(nx - 1, j) + H(0.0));
        }
    }
    for (int i = 0; i < nx; ++i) {
        for (int f = 1; f < nz; ++f)
            d.hz[static_cast<std::size_t>(i) * (nz + 1) + f] = 0.5 * (hcell(i, f - 1) + hcell(i, f));
        if (bc.vertical() == SideKind::dirichlet) {
            d.hz[static_cast<std::size_t>(i) * (nz + 1)] = 0.5 * hcell(i, 0);
            d.hz[static_cast<std::size_t>(i) * (nz + 1) + nz] = 0.5 * hcell(i, nz - 1);
        }
    }
    return d;
}

// Applies sum over faces of k_f (v_c - v_nb) with Dirichlet faces
// contributing 2 k_f (v_c - g). kx/kz are per-face weights already divided
// by h^2. With `boundary_data` false the boundary values are taken as zero.
inline void apply_face_operator(const Grid& g, const BoundaryConditions& bc, const std::vector<double>& kx,
                                const std::vector<double>& kz, std::span<const double> v, std::span<double> out,
                                bool boundary_data) {
    const int nx = g.nx();
    const int nz = g.nz();
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nz; ++j) {
            const std::size_t c = g.index(i, j);
            const double vc = v[c];
            double acc = 0.0;
            // west face
            {
                const double k = kx[static_cast<std::size_t>(i) * nz + j];
                if (i > 0) acc += k * (vc - v[c - nz]);
                else if (bc.periodic_x()) acc += k * (vc - v[g.index(nx - 1, j)]);
                else if (bc.west() == SideKind::dirichlet)
                    acc += 2.0 * k * (vc - (boundary_data ? bc.west_value(j) : 0.0));
            }
            // east face
            {
                const double k = kx[static_cast<std::size_t>(i + 1) * nz + j];
                if (i < nx - 1) acc += k * (vc - v[c + nz]);
                else if (bc.periodic_x()) acc += k * (vc - v[g.index(0, j)]);
                else if (bc.east() == SideKind::dirichlet) acc += 2.0 * k * vc;
            }
            const std::size_t zb = static_cast<std::size_t>(i) * (nz + 1);
            {
                const double k = kz[zb + j];
                if (j > 0) acc += k * (vc - v[c - 1]);
                else if (bc.vertical() == SideKind::dirichlet) acc += 2.0 * k * vc;
            }
            {
                const double k = kz[zb + j + 1];
                if (j < nz - 1) acc += k * (vc - v[c + 1]);
                else if (bc.vertical() == SideKind::dirichlet) acc += 2.0 * k * vc;
            }
            out[c] = acc;
        }
    }
}

}  // namespace detail

/// The implicit operator I - beta^2 lap_h + dt beta L_H(S) acting on
/// increments (homogeneous boundary data).
inline LinearOperator implicit_operator(const ScalarField& S, double dt, double beta2,
                                        const CoefficientSet& coeffs, const BoundaryConditions& bc,
                                        DiffusionModel model) {
    const Grid g = S.grid();
    const int nx = g.nx();
    const int nz = g.nz();
    const double beta = std::sqrt(beta2);
    const detail::FaceDiffusivity d = detail::face_diffusivity(S, coeffs, bc, model);
    const double ix2 = 1.0 / (g.dx() * g.dx());
    const double iz2 = 1.0 / (g.dz() * g.dz());

    // Face weights; pseudo-parabolic coupling exists on every face that the
    // Laplacian couples, diffusion only where hx/hz are set.
    std::vector<double> kx(d.hx.size()), kz(d.hz.size());
    for (int f = 0; f <= nx; ++f)
        for (int j = 0; j < nz; ++j) {
            const std::size_t k = static_cast<std::size_t>(f) * nz + j;
            const bool boundary = f == 0 || f == nx;
            const bool coupled = !boundary || bc.periodic_x() ||
                                 (f == 0 ? bc.west() == SideKind::dirichlet : bc.east() == SideKind::dirichlet);
            kx[k] = coupled ? (beta2 + dt * beta * d.hx[k]) * ix2 : 0.0;
        }
    for (int i = 0; i < nx; ++i)
        for (int f = 0; f <= nz; ++f) {
            const std::size_t k = static_cast<std::size_t>(i) * (nz + 1) + f;
            const bool boundary = f == 0 || f == nz;
            const bool coupled = !boundary || bc.vertical() == SideKind::dirichlet;
            kz[k] = coupled ? (beta2 + dt * beta * d.hz[k]) * iz2 : 0.0;
        }

    LinearOperator A;
    A.size = g.size();
    A.diagonal.assign(g.size(), 1.0);
    bool dominant = true;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nz; ++j) {
            const std::size_t c = g.index(i, j);
            const double w = kx[static_cast<std::size_t>(i) * nz + j];
            const double e = kx[static_cast<std::size_t>(i + 1) * nz + j];
            const double s = kz[static_cast<std::size_t>(i) * (nz + 1) + j];
            const double n = kz[static_cast<std::size_t>(i) * (nz + 1) + j + 1];
            double diag = 1.0, off = 0.0;
            auto add = [&](double k, bool interior) {
                if (interior) {
                    diag += k;
                    off += k;
                } else {
                    diag += 2.0 * k;
                }
            };
            add(w, i > 0 || bc.periodic_x());
            add(e, i < nx - 1 || bc.periodic_x());
            add(s, j > 0);
            add(n, j < nz - 1);
            A.diagonal[c] = diag;
            if (!(diag > 0.0 && diag >= off)) dominant = false;
        }
    A.positive_certificate = dominant;

    // x-line preconditioner: the tridiagonal x-part of A (periodic wrap
    // dropped) solved exactly along every row j by the Thomas algorithm.
    std::vector<double> lower(g.size(), 0.0);
    for (int i = 1; i < nx; ++i)
        for (int j = 0; j < nz; ++j) lower[g.index(i, j)] = -kx[static_cast<std::size_t>(i) * nz + j];
    A.precondition = [g, diag = A.diagonal, lower = std::move(lower)](std::span<const double> r,
                                                                       std::span<double> z) {
        const int nx = g.nx();
        const int nz = g.nz();
        std::vector<double> c(nx);
        for (int j = 0; j < nz; ++j) {
            double denom = diag[g.index(0, j)];
            z[g.index(0, j)] = r[g.index(0, j)] / denom;
            for (int i = 1; i < nx; ++i) {
                const std::size_t k = g.index(i, j);
                c[i - 1] = lower[k] / denom;  // super-diagonal of row i-1 equals lower[k]
                denom = diag[k] - lower[k] * c[i - 1];
                z[k] = (r[k] - lower[k] * z[g.index(i - 1, j)]) / denom;
            }
            for (int i = nx - 2; i >= 0; --i) z[g.index(i, j)] -= c[i] * z[g.index(i + 1, j)];
        }
    };
    A.apply = [g, bc, kx = std::move(kx), kz = std::move(kz)](std::span<const double> v, std::span<double> out) {
        detail::apply_face_operator(g, bc, kx, kz, v, out, false);
        for (std::size_t c = 0; c < v.size(); ++c) out[c] += v[c];
    };
    return A;
}

/// L_H(S) S including boundary data, i.e. -div_h(H grad_h S).
inline ScalarField diffusion_operator(const ScalarField& S, const CoefficientSet& coeffs,
                                      const BoundaryConditions& bc, DiffusionModel model) {
    const Grid& g = S.grid();
    const detail::FaceDiffusivity d = detail::face_diffusivity(S, coeffs, bc, model);
    const double ix2 = 1.0 / (g.dx() * g.dx());
    const double iz2 = 1.0 / (g.dz() * g.dz());
    std::vector<double> kx(d.hx), kz(d.hz);
    for (double& k : kx) k *= ix2;
    for (double& k : kz) k *= iz2;
    ScalarField out(g);
    detail::apply_face_operator(g, bc, kx, kz, S.values(), out.values(), true);
    return out;
}

struct StepResult {
    TimeStepState state;
    StepInfo info;
};

/// One IMEX step of size dt from `state` using the velocity V of state.S.
inline StepResult step(const TimeStepState& state, double dt, const SimConfig& cfg,
                       const CoefficientSet& coeffs, const BoundaryConditions& bc, const VelocityField& V) {
    const ScalarField& S = state.S;
    const Grid& g = S.grid();
    StepInfo info;
    info.dt = dt;

    ScalarField rhs = advective_divergence(S, V, coeffs, bc);
    rhs *= -dt;

    ScalarField next = S;
    if (cfg.beta2 == 0.0) {
        next += rhs;
    } else {
        const double beta = cfg.beta();
        ScalarField diff = diffusion_operator(S, coeffs, bc, cfg.diffusion);
        diff *= dt * beta;
        rhs -= diff;
        const LinearOperator A = implicit_operator(S, dt, cfg.beta2, coeffs, bc, cfg.diffusion);
        // Previous increment rescaled to the new step as starting guess.
        std::vector<double> guess(g.size(), 0.0);
        if (state.dt_last > 0.0) {
            const double scale = dt / state.dt_last;
            for (std::size_t k = 0; k < g.size(); ++k) guess[k] = scale * (S[k] - state.S_prev[k]);
        }
        const int cap = static_cast<int>(10.0 * std::sqrt(static_cast<double>(g.size())));
        SolveStats stats;
        std::vector<double> delta;
        try {
            delta = cg_solve(A, rhs.values(), guess, cfg.solver_tol, cap, &stats);
        } catch (const SolverError& e) {
            throw StepFailure(std::string("step at t=") + std::to_string(state.t) + ": " + e.what(), state.t,
                              e.stats());
        }
        info.cg_iterations = stats.iterations;
        info.cg_relative_residual = stats.relative_residual;
        for (std::size_t k = 0; k < g.size(); ++k) next[k] += delta[k];
    }
    if (cfg.clamp)
        for (double& v : next.values()) v = std::clamp(v, 0.0, 1.0);
    if (!next.all_finite()) throw StepFailure("step produced non-finite saturation", state.t, {});

    StepResult out{TimeStepState{state.t + dt, std::move(next), S, dt}, info};
    return out;
}

struct Snapshot {
    double t = 0.0;
    ScalarField S;
};

struct DiagnosticsSinks {
    std::function<void(const TimeStepState&, const StepInfo&)> on_step;
    std::function<void(const Snapshot&)> on_snapshot;
};

struct RunResult {
    DiagnosticsReport report;
    std::vector<Snapshot> snapshots;
    std::optional<TimeStepState> final_state;
    bool ok = true;
    std::string error;
};

/// Levels used for the front metrics on the mid-height line.
struct FrontLevels {
    double position_level = 0.5;
    double width_lo = 0.1;
    double width_hi = 0.8;
    double z_line = 0.5;
};

/// Runs to cfg.end_time, landing exactly on every snapshot time. A step
/// failure stops the run; everything recorded up to that point is kept
/// and `ok` is false.
inline RunResult run(const SimConfig& cfg, const CoefficientSet& coeffs, const InitialCondition& ic,
                     const DiagnosticsSinks& hooks = {}, const FrontLevels& levels = {}) {
    const Grid grid(cfg.nx, cfg.nz);
    const BoundaryConditions bc = cfg.boundary(grid, ic);
    RunResult result;
    TimeStepState state{0.0, ic.sample(grid), ic.sample(grid), 0.0};

    auto snapshot = [&](const TimeStepState& s) {
        result.snapshots.push_back({s.t, s.S});
        if (hooks.on_snapshot) hooks.on_snapshot(result.snapshots.back());
    };
    snapshot(state);

    std::vector<double> targets;
    for (double t : cfg.snapshot_schedule())
        if (t > 0.0) targets.push_back(t);
    std::size_t next_target = 0;

    const double plateau = ic.reference_plateau();
    const double T = cfg.end_time;
    DiagnosticsReport& rep = result.report;
    try {
        while (next_target < targets.size()) {
            const VelocityField V = compute_velocity(state.S, coeffs, bc);
            double dt = choose_dt(state, cfg, coeffs, V, bc);
            const double target = targets[next_target];
            bool lands = false;
            if (state.t + dt >= target - 1e-12 * T) {
                dt = target - state.t;
                lands = true;
            } else if (state.t + 2.0 * dt > target) {
                // split the remainder evenly instead of leaving a sliver
                dt = 0.5 * (target - state.t);
            }
            StepResult r = step(state, dt, cfg, coeffs, bc, V);
            if (lands) r.state.t = target;
            r.info.incompressibility_residual = incompressibility_residual(V, bc);

            const ScalarField inc = r.state.S - state.S;
            rep.time.push_back(r.state.t);
            rep.dt.push_back(dt);
            rep.total_mass.push_back(total_mass(r.state.S));
            rep.energy.push_back(energy(r.state.S, cfg.beta2, bc));
            rep.gradient_energy.push_back(gradient_norm_squared(r.state.S, bc));
            rep.increment.push_back(norm_l2_squared(inc) + cfg.beta2 * gradient_norm_squared(inc, bc));
            rep.overshoot_max.push_back(overshoot_max(r.state.S, plateau));
            rep.front_position.push_back(front_position(r.state.S, levels.position_level, levels.z_line));
            rep.front_width.push_back(front_width(r.state.S, levels.width_lo, levels.width_hi, levels.z_line));
            rep.incompressibility_residual.push_back(r.info.incompressibility_residual);
            rep.cg_iterations.push_back(r.info.cg_iterations);

            state = std::move(r.state);
            if (hooks.on_step) hooks.on_step(state, r.info);
            while (next_target < targets.size() && state.t >= targets[next_target]) {
                snapshot(state);
                ++next_target;
            }
        }
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
    }
    result.final_state = std::move(state);
    return result;
}

inline RunResult run(const SimConfig& cfg, const CoefficientSet& coeffs, const DiagnosticsSinks& hooks = {}) {
    return run(cfg, coeffs, cfg.initial, hooks);
}

}  // namespace bve
