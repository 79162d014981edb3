#pragma once

/// \file
/// Nonlocal velocity reconstruction. The horizontal component is the
/// column-normalised total mobility,
///
///   U[S](x,z) = lambda(S(x,z)) / int_0^1 lambda(S(x,r)) dr,
///
/// and the vertical component is W[S] = -d/dx int_0^z U dr. No pressure
/// solve is involved.
///
/// The column integral in the denominator lives on a set of measure zero
/// in z; for H1 saturations it is understood in the trace sense. On the
/// grid it is an ordinary midpoint sum.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "coefficients.hpp"
#include "grid.hpp"

namespace bve {

/// x-derivative used inside W.
enum class XStencil {
    consistent,  ///< the second-order `gradient_x` stencil
    forward      ///< first-order forward differences (negative controls only)
};

/// U is cell-centred. W(i, j) is the vertical velocity on the upper face of
/// cell (i, j); the lower face of cell (i, 0) is the bottom wall where W = 0
/// by construction, and W(i, nz-1) is the top wall.
struct VelocityField {
    ScalarField U;
    ScalarField W;

    /// W averaged to the centre of cell (i, j).
    double w_center(int i, int j) const noexcept {
        const double below = j > 0 ? W(i, j - 1) : 0.0;
        return 0.5 * (below + W(i, j));
    }
};

inline ScalarField compute_U(const ScalarField& S, const CoefficientSet& coeffs) {
    const Grid& g = S.grid();
    ScalarField U(g);
    const double floor = 0.5 * coeffs.lambda_floor();
    for (int i = 0; i < g.nx(); ++i) {
        double column = 0.0;
        for (int j = 0; j < g.nz(); ++j) {
            const double lam = coeffs.total_mobility(S(i, j));
            U(i, j) = lam;
            column += lam;
        }
        column *= g.dz();
        if (!(column >= floor))
            throw std::runtime_error("compute_U: degenerate column " + std::to_string(i) +
                                     " (mobility integral " + std::to_string(column) + ")");
        const double inv = 1.0 / column;
        for (int j = 0; j < g.nz(); ++j) U(i, j) *= inv;
    }
    return U;
}

/// W = -D_x of the cumulative z-integral of U. The two linear operators
/// commute, and summing D_x U upwards keeps D_z W = -D_x U accurate to a
/// few ulps of D_x U instead of amplifying rounding in the cumulative sum
/// by 1 / (dx dz).
inline ScalarField compute_W(const ScalarField& U, const BoundaryConditions& bc,
                             XStencil stencil = XStencil::consistent) {
    const ScalarField dudx = stencil == XStencil::consistent ? gradient_x(U, bc) : forward_difference_x(U);
    ScalarField W = column_cumulative_integral(dudx);
    W *= -1.0;
    return W;
}

/// Velocity pair for a saturation field. Saturations are projected onto the
/// coefficient domain first, so states drifting slightly outside [0,1] are
/// admissible here.
inline VelocityField compute_velocity(const ScalarField& S, const CoefficientSet& coeffs,
                                      const BoundaryConditions& bc,
                                      XStencil stencil = XStencil::consistent) {
    ScalarField projected = S;
    for (double& v : projected.values()) v = coeffs.to_domain(v);
    ScalarField U = compute_U(projected, coeffs);
    ScalarField W = compute_W(U, bc, stencil);
    return {std::move(U), std::move(W)};
}

/// max over cells of |D_x U + D_z W|, with D_x the consistent stencil and
/// D_z the exact inverse of the cumulative z-sum.
inline double incompressibility_residual(const VelocityField& v, const BoundaryConditions& bc) {
    const Grid& g = v.U.grid();
    const ScalarField dudx = gradient_x(v.U, bc);
    double worst = 0.0;
    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.nz(); ++j) {
            const double below = j > 0 ? v.W(i, j - 1) : 0.0;
            const double dwdz = (v.W(i, j) - below) / g.dz();
            worst = std::max(worst, std::abs(dudx(i, j) + dwdz));
        }
    }
    return worst;
}

}  // namespace bve
