#pragma once

/// \file
/// Scalar functionals of saturation snapshots.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "grid.hpp"

namespace bve {

inline double total_mass(const ScalarField& S) {
    double s = 0.0;
    for (double v : S.values()) s += v;
    return s * S.grid().cell_area();
}

/// max S - plateau; positive values mean the front overshoots the injected
/// saturation.
inline double overshoot_max(const ScalarField& S, double plateau) {
    return *std::max_element(S.values().begin(), S.values().end()) - plateau;
}

/// Saturation along the horizontal line z = z_line, linearly interpolated
/// between the two nearest rows of cell centres.
inline std::vector<double> horizontal_profile(const ScalarField& S, double z_line) {
    const Grid& g = S.grid();
    const double pos = std::clamp(z_line / g.dz() - 0.5, 0.0, g.nz() - 1.0);
    const int j0 = std::min(static_cast<int>(pos), g.nz() - 2);
    const double t = pos - j0;
    std::vector<double> line(g.nx());
    for (int i = 0; i < g.nx(); ++i) line[i] = (1.0 - t) * S(i, j0) + t * S(i, j0 + 1);
    return line;
}

/// Largest x on the line z = z_line with S >= level, interpolated linearly
/// between cell centres. 0 when the level is never reached, 1 when it is
/// reached in the last cell.
inline double front_position(const ScalarField& S, double level, double z_line) {
    const Grid& g = S.grid();
    const std::vector<double> line = horizontal_profile(S, z_line);
    const int nx = g.nx();
    if (line[nx - 1] >= level) return 1.0;
    for (int i = nx - 2; i >= 0; --i) {
        if (line[i] >= level) {
            const double frac = (line[i] - level) / (line[i] - line[i + 1]);
            return g.x(i) + frac * g.dx();
        }
    }
    return 0.0;
}

/// front_position(lo) - front_position(hi) for saturation levels lo < hi.
/// Empty when either level is absent from the line.
inline std::optional<double> front_width(const ScalarField& S, double lo_level, double hi_level,
                                         double z_line) {
    const std::vector<double> line = horizontal_profile(S, z_line);
    const double peak = *std::max_element(line.begin(), line.end());
    if (peak < hi_level || peak < lo_level) return std::nullopt;
    const double width = front_position(S, lo_level, z_line) - front_position(S, hi_level, z_line);
    return std::max(width, 0.0);
}

/// Discrete ||S||^2 + beta^2 ||grad_h S||^2. The gradient uses the same
/// boundary faces as the implicit operator; for the default (homogeneous
/// Dirichlet) boundary this is the energy of the a priori estimate.
inline double energy(const ScalarField& S, double beta2,
                     const BoundaryConditions& bc = BoundaryConditions::analysis()) {
    double e = norm_l2_squared(S);
    if (beta2 > 0.0) e += beta2 * gradient_norm_squared(S, bc);
    return e;
}

/// Per-step diagnostics of a finite-volume run. Every vector has one entry
/// per completed step.
struct DiagnosticsReport {
    std::vector<double> time;
    std::vector<double> dt;
    std::vector<double> total_mass;
    std::vector<double> energy;
    /// ||grad_h S||^2 of the new state.
    std::vector<double> gradient_energy;
    /// ||dS||^2 + beta^2 ||grad_h dS||^2 of the step increment dS.
    std::vector<double> increment;
    std::vector<double> overshoot_max;
    std::vector<double> front_position;
    std::vector<std::optional<double>> front_width;
    std::vector<double> incompressibility_residual;
    std::vector<int> cg_iterations;

    std::size_t steps() const noexcept { return time.size(); }
};

}  // namespace bve
