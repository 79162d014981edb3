#pragma once

/// \file
/// Seeded randomized property suite behind `bve check-invariants`.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "experiments.hpp"

namespace bve {

struct PropertyResult {
    std::string name;
    bool pass = false;
    /// Worst observed value of the checked quantity.
    double worst = 0.0;
    double limit = 0.0;
};

/// Independent uniform samples in [lo, hi].
inline ScalarField random_field(const Grid& g, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    ScalarField S(g);
    for (double& v : S.values()) v = d(rng);
    return S;
}

/// Random combination of a few low Fourier modes, mapped into [0, 1].
inline ScalarField random_smooth_field(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    double amp[3][3], phase[3][3];
    for (auto& row : amp)
        for (double& a : row) a = d(rng);
    for (auto& row : phase)
        for (double& p : row) p = std::numbers::pi * d(rng);
    return ScalarField::sample(g, [&](double x, double z) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
                s += amp[k][l] * std::cos((k + 1) * std::numbers::pi * x + phase[k][l]) *
                     std::cos(l * std::numbers::pi * z);
        return 0.5 + 0.5 * std::tanh(s);
    });
}

/// Velocity properties on `samples` random fields (and field pairs) on a
/// 256x16 grid.
inline std::vector<PropertyResult> run_velocity_properties(std::mt19937_64& rng, int samples = 100) {
    const CoefficientSet coeffs(2.0);
    const BoundaryConditions bc = BoundaryConditions::analysis();
    const Grid g(256, 16);
    std::vector<PropertyResult> out;

    PropertyResult norm{"velocity_normalization", true, 0.0, 1e-13};
    PropertyResult top{"vertical_velocity_top", true, 0.0, 1e-12};
    PropertyResult incomp{"incompressibility", true, 0.0, 1e-12};
    PropertyResult control{"incompressibility_negative_control", true, 1e300, 1e-4};
    PropertyResult bound1{"velocity_bound", true, 0.0, coeffs.lambda_sup() / coeffs.lambda_floor()};
    const double lip = 2.0 * coeffs.lambda_sup() * coeffs.lipschitz_lambda() /
                       (coeffs.lambda_floor() * coeffs.lambda_floor());
    PropertyResult bound2{"velocity_lipschitz_ratio", true, 0.0, lip};
    PropertyResult bound3{"vertical_velocity_ratio", true, 0.0, lip};
    for (int n = 0; n < samples; ++n) {
        const ScalarField S = random_field(g, rng);
        const VelocityField V = compute_velocity(S, coeffs, bc);
        for (int i = 0; i < g.nx(); ++i) {
            double col = 0.0;
            for (int j = 0; j < g.nz(); ++j) col += V.U(i, j);
            norm.worst = std::max(norm.worst, std::abs(col * g.dz() - 1.0));
            top.worst = std::max(top.worst, std::abs(V.W(i, g.nz() - 1)));
        }
        incomp.worst = std::max(incomp.worst, incompressibility_residual(V, bc));
        const VelocityField Vf = compute_velocity(S, coeffs, bc, XStencil::forward);
        control.worst = std::min(control.worst, incompressibility_residual(Vf, bc));
        for (double u : V.U.values()) bound1.worst = std::max(bound1.worst, u);

        const ScalarField S2 = random_field(g, rng);
        const ScalarField dU = compute_U(S, coeffs) - compute_U(S2, coeffs);
        const ScalarField dS = S - S2;
        bound2.worst = std::max(bound2.worst, std::sqrt(norm_l2_squared(dU) / norm_l2_squared(dS)));

        const ScalarField Ss = random_smooth_field(g, rng);
        const VelocityField Vs = compute_velocity(Ss, coeffs, bc);
        const double dx_norm = norm_l2_squared(gradient_x(Ss, bc));
        if (dx_norm > 0.0) bound3.worst = std::max(bound3.worst, std::sqrt(norm_l2_squared(Vs.W) / dx_norm));
    }
    norm.pass = norm.worst <= norm.limit;
    top.pass = top.worst <= top.limit;
    incomp.pass = incomp.worst <= incomp.limit;
    control.pass = control.worst >= control.limit;
    bound1.pass = bound1.worst <= bound1.limit * (1.0 + 1e-12);
    bound2.pass = bound2.worst <= bound2.limit;
    bound3.pass = bound3.worst <= bound3.limit;
    out.insert(out.end(), {norm, top, incomp, control, bound1, bound2, bound3});
    return out;
}

/// Time-stepping properties: constant states, closed-box mass and the
/// transport maximum principle.
inline std::vector<PropertyResult> run_solver_properties(std::mt19937_64& rng) {
    const CoefficientSet coeffs(2.0);
    std::vector<PropertyResult> out;

    // Constant states in the closed box stay constant.
    PropertyResult constant{"constant_state_preservation", true, 0.0, 1e-9};
    for (double b2 : {0.0, 1e-4, 1e-2}) {
        SimConfig cfg;
        cfg.nx = 64;
        cfg.nz = 16;
        cfg.beta2 = b2;
        cfg.bc_mode = BoundaryMode::closed;
        const Grid gc(cfg.nx, cfg.nz);
        const BoundaryConditions cbc = BoundaryConditions::closed();
        TimeStepState st{0.0, ScalarField(gc, 0.5), ScalarField(gc, 0.5), 0.0};
        for (int n = 0; n < 100; ++n) {
            const VelocityField V = compute_velocity(st.S, coeffs, cbc);
            st = step(st, 1e-3, cfg, coeffs, cbc, V).state;
        }
        for (double v : st.S.values()) constant.worst = std::max(constant.worst, std::abs(v - 0.5));
    }
    constant.pass = constant.worst <= constant.limit;
    out.push_back(constant);

    // Closed-box mass conservation on random smooth data.
    PropertyResult mass{"closed_box_mass", true, 0.0, 1e-10};
    {
        SimConfig cfg;
        cfg.nx = 64;
        cfg.nz = 16;
        cfg.beta2 = 1e-2;
        cfg.bc_mode = BoundaryMode::closed;
        const Grid gc(cfg.nx, cfg.nz);
        const BoundaryConditions cbc = BoundaryConditions::closed();
        const ScalarField S0 = random_smooth_field(gc, rng);
        TimeStepState st{0.0, S0, S0, 0.0};
        for (int n = 0; n < 500; ++n) {
            const double before = total_mass(st.S);
            const VelocityField V = compute_velocity(st.S, coeffs, cbc);
            const double dt = choose_dt(st, cfg, coeffs, V, cbc);
            st = step(st, dt, cfg, coeffs, cbc, V).state;
            mass.worst = std::max(mass.worst, std::abs(total_mass(st.S) - before) / before);
        }
    }
    mass.pass = mass.worst <= mass.limit;
    out.push_back(mass);

    // Transport limit respects the maximum principle.
    PropertyResult maxp{"transport_maximum_principle", true, -1.0, 1e-12};
    {
        SimConfig cfg;
        cfg.nx = 128;
        cfg.nz = 16;
        cfg.beta2 = 0.0;
        const Grid ge(cfg.nx, cfg.nz);
        const InitialCondition ic = InitialCondition::injection_default();
        const BoundaryConditions ebc = cfg.boundary(ge, ic);
        double inflow_max = 0.0;
        for (double v : ebc.inflow) inflow_max = std::max(inflow_max, v);
        TimeStepState st{0.0, ic.sample(ge), ic.sample(ge), 0.0};
        for (int n = 0; n < 200; ++n) {
            const double cap = std::max(*std::max_element(st.S.values().begin(), st.S.values().end()), inflow_max);
            const VelocityField V = compute_velocity(st.S, coeffs, ebc);
            st = step(st, choose_dt(st, cfg, coeffs, V, ebc), cfg, coeffs, ebc, V).state;
            const double top_now = *std::max_element(st.S.values().begin(), st.S.values().end());
            maxp.worst = std::max(maxp.worst, top_now - cap);
        }
    }
    maxp.pass = maxp.worst <= maxp.limit;
    out.push_back(maxp);
    return out;
}

inline std::vector<PropertyResult> run_property_suite(std::uint64_t seed, int samples = 100) {
    std::mt19937_64 rng(seed);
    std::vector<PropertyResult> out = run_velocity_properties(rng, samples);
    const std::vector<PropertyResult> solver = run_solver_properties(rng);
    out.insert(out.end(), solver.begin(), solver.end());
    return out;
}

/// Worst excess of E_n + 2 beta sum_k dt_k |grad S^k|^2 over E_0 (1 + eps)
/// along a finite-volume run; the run passes when it is <= 0. Meaningful
/// for unit diffusion and homogeneous Dirichlet data.
inline double fv_energy_excess(const RunResult& r, double beta2, double eps = 1e-8) {
    if (r.snapshots.empty()) return 0.0;
    const double e0 = energy(r.snapshots.front().S, beta2);
    const double beta = std::sqrt(beta2);
    double dissipated = 0.0, worst = -e0 * (1.0 + eps);
    for (std::size_t n = 0; n < r.report.steps(); ++n) {
        dissipated += r.report.dt[n] * r.report.gradient_energy[n];
        worst = std::max(worst, r.report.energy[n] + 2.0 * beta * dissipated - e0 * (1.0 + eps));
    }
    return worst;
}

inline std::string to_text(const std::vector<PropertyResult>& results, std::uint64_t seed) {
    std::ostringstream os;
    os << "seed " << seed << '\n';
    for (const PropertyResult& r : results)
        os << (r.pass ? "PASS " : "FAIL ") << r.name << " worst=" << format_real(r.worst)
           << " limit=" << format_real(r.limit) << '\n';
    return os.str();
}

}  // namespace bve

namespace bve {

/// Galerkin checks: slab residuals and the energy estimate on the nonlinear
/// model, the assembled-vs-difference Jacobian and the increment scaling on
/// the linear model, the beta^2 scaling of increments, and the cross-check
/// against the finite-volume solver.
inline std::vector<PropertyResult> run_galerkin_verification(std::string* details = nullptr) {
    std::vector<PropertyResult> out;
    std::ostringstream log;
    const CoefficientSet corey(2.0);
    const CoefficientSet linear = CoefficientSet::linear();
    const InitialCondition ic = InitialCondition::bump(0.8);
    auto datum = [&](double x, double z) { return ic.eval(x, z); };

    const SineBasis basis(4, 4);
    const CoefVector c0 = project_initial(datum, basis);
    const GalerkinTrajectory traj = run_galerkin(c0, 0.005, 20, 1e-2, corey, basis);
    PropertyResult newton{"slab_newton_residual", true, 0.0, 1e-10};
    for (double r : traj.residuals) newton.worst = std::max(newton.worst, r);
    newton.pass = newton.worst <= newton.limit;
    out.push_back(newton);

    const EnergyReport energy_rep = check_energy_estimate(traj, basis, 1e-8);
    log << to_text(energy_rep);
    out.push_back({"energy_estimate", energy_rep.pass, -energy_rep.margin, 0.0});

    PropertyResult jac{"linear_jacobian_difference", true, 0.0, 1e-6};
    {
        const double dt = 0.01;
        auto K = [&](const CoefVector& c) { return residual_K(c0, c, dt, 1e-2, linear, basis); };
        jac.worst = (fd_jacobian(K, c0) - linear_jacobian(dt, 1e-2, basis)).cwiseAbs().maxCoeff();
        jac.pass = jac.worst <= jac.limit;
    }
    out.push_back(jac);

    std::vector<GalerkinTrajectory> runs;
    for (double dt : {0.02, 0.01, 0.005, 0.0025, 0.00125})
        runs.push_back(run_galerkin(c0, dt, static_cast<int>(std::lround(0.04 / dt)), 1e-2, linear, basis));
    const IncrementReport inc = check_increment_estimate(runs, basis);
    log << to_text(inc);
    out.push_back({"increment_dt_slope", inc.pass, inc.slope, 2.0});

    std::vector<double> b2s{1e-2, 5e-3, 2.5e-3, 1.25e-3}, incs;
    for (double b2 : b2s) incs.push_back(max_increment(run_galerkin(c0, 0.005, 8, b2, corey, basis), basis));
    const double b2_slope = loglog_slope(b2s, incs);
    log << "increment beta2 slope " << b2_slope << '\n';
    out.push_back({"increment_beta2_slope", b2_slope >= -1.1, b2_slope, -1.1});

    const CrossCheck cross = galerkin_fv_crosscheck(ic, 1e-2, 0.05, 128, 32, SineBasis(8, 8), 20, corey);
    out.push_back({"galerkin_fv_crosscheck", cross.fv_ok && cross.relative_l2 <= 0.05, cross.relative_l2, 0.05});
    if (details) *details = log.str();
    return out;
}

}  // namespace bve
