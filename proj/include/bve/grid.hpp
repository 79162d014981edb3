#pragma once

/// \file
/// Cartesian cell-centred grid on the unit square, scalar fields and the
/// discrete operators shared by the finite-volume solver and the Galerkin
/// quadrature.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bve {

class Grid {
public:
    static constexpr int min_cells = 4;

    Grid(int nx, int nz) : nx_(nx), nz_(nz) {
        if (nx < min_cells || nz < min_cells)
            throw std::invalid_argument("grid needs at least 4 cells per direction, got " +
                                        std::to_string(nx) + "x" + std::to_string(nz));
        dx_ = 1.0 / nx;
        dz_ = 1.0 / nz;
    }

    int nx() const noexcept { return nx_; }
    int nz() const noexcept { return nz_; }
    double dx() const noexcept { return dx_; }
    double dz() const noexcept { return dz_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * nz_; }
    double cell_area() const noexcept { return dx_ * dz_; }

    double x(int i) const noexcept { return (i + 0.5) * dx_; }
    double z(int j) const noexcept { return (j + 0.5) * dz_; }

    /// Columns are contiguous: index = i * nz + j.
    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * nz_ + j;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int nx_;
    int nz_;
    double dx_;
    double dz_;
};

class ScalarField {
public:
    explicit ScalarField(Grid grid, double value = 0.0)
        : grid_(grid), values_(grid.size(), value) {}

    ScalarField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw std::invalid_argument("field size does not match grid");
    }

    template <class Fn>
    static ScalarField sample(Grid grid, Fn&& fn) {
        ScalarField out(grid);
        for (int i = 0; i < grid.nx(); ++i)
            for (int j = 0; j < grid.nz(); ++j) out(i, j) = fn(grid.x(i), grid.z(j));
        return out;
    }

    const Grid& grid() const noexcept { return grid_; }
    double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
    double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> column(int i) const noexcept {
        return std::span<const double>(values_).subspan(grid_.index(i, 0), grid_.nz());
    }

    bool all_finite() const noexcept {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    ScalarField& operator+=(const ScalarField& o) {
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    ScalarField& operator*=(double a) {
        for (double& v : values_) v *= a;
        return *this;
    }
    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Boundary treatment of the saturation equation.
///
/// - `experiment`: Dirichlet inflow values at x = 0, outflow (homogeneous
///   Neumann) at x = 1, impermeable no-flux walls at z = 0 and z = 1.
/// - `analysis`: homogeneous Dirichlet on the whole boundary.
/// - `closed`: periodic in x and no-flux in z, so no mass leaves the box.
enum class BoundaryMode { experiment, analysis, closed };

enum class SideKind { dirichlet, neumann, periodic };

struct BoundaryConditions {
    BoundaryMode mode = BoundaryMode::analysis;
    /// Inflow saturation per z-cell (experiment mode only).
    std::vector<double> inflow;

    static BoundaryConditions analysis() { return {BoundaryMode::analysis, {}}; }
    static BoundaryConditions closed() { return {BoundaryMode::closed, {}}; }
    static BoundaryConditions experiment(std::vector<double> inflow_values) {
        return {BoundaryMode::experiment, std::move(inflow_values)};
    }

    bool periodic_x() const noexcept { return mode == BoundaryMode::closed; }

    SideKind west() const noexcept {
        return mode == BoundaryMode::closed ? SideKind::periodic : SideKind::dirichlet;
    }
    SideKind east() const noexcept {
        switch (mode) {
        case BoundaryMode::experiment: return SideKind::neumann;
        case BoundaryMode::analysis: return SideKind::dirichlet;
        case BoundaryMode::closed: return SideKind::periodic;
        }
        return SideKind::neumann;
    }
    /// Both z walls share one kind.
    SideKind vertical() const noexcept {
        return mode == BoundaryMode::analysis ? SideKind::dirichlet : SideKind::neumann;
    }

    double west_value(int j) const noexcept {
        return mode == BoundaryMode::experiment && !inflow.empty() ? inflow[j] : 0.0;
    }

    void validate(const Grid& g) const {
        if (mode == BoundaryMode::experiment && inflow.size() != static_cast<std::size_t>(g.nz()))
            throw std::invalid_argument("experiment boundary needs one inflow value per z-cell");
    }
};

/// Second-order derivative in x: centred in the interior, one-sided
/// three-point stencils at x = 0 and x = 1, wrapped for periodic boxes.
inline ScalarField gradient_x(const ScalarField& field, const BoundaryConditions& bc) {
    const Grid& g = field.grid();
    const int nx = g.nx();
    const double inv2dx = 0.5 / g.dx();
    ScalarField out(g);
    for (int j = 0; j < g.nz(); ++j) {
        for (int i = 1; i < nx - 1; ++i) out(i, j) = (field(i + 1, j) - field(i - 1, j)) * inv2dx;
        if (bc.periodic_x()) {
            out(0, j) = (field(1, j) - field(nx - 1, j)) * inv2dx;
            out(nx - 1, j) = (field(0, j) - field(nx - 2, j)) * inv2dx;
        } else {
            out(0, j) = (-3.0 * field(0, j) + 4.0 * field(1, j) - field(2, j)) * inv2dx;
            out(nx - 1, j) =
                (3.0 * field(nx - 1, j) - 4.0 * field(nx - 2, j) + field(nx - 3, j)) * inv2dx;
        }
    }
    return out;
}

/// Forward difference in x (backward in the last cell). Only first-order;
/// used as a deliberately inconsistent stencil in negative controls.
inline ScalarField forward_difference_x(const ScalarField& field) {
    const Grid& g = field.grid();
    const int nx = g.nx();
    ScalarField out(g);
    for (int j = 0; j < g.nz(); ++j) {
        for (int i = 0; i < nx - 1; ++i) out(i, j) = (field(i + 1, j) - field(i, j)) / g.dx();
        out(nx - 1, j) = (field(nx - 1, j) - field(nx - 2, j)) / g.dx();
    }
    return out;
}

namespace detail {

// Neighbour value across a boundary face for the Laplacian ghost cell.
inline double ghost(SideKind kind, double inside, double boundary_value) {
    return kind == SideKind::dirichlet ? 2.0 * boundary_value - inside : inside;
}

}  // namespace detail

/// Five-point Laplacian with ghost values set by the boundary mode
/// (Dirichlet reflection about the boundary value, Neumann mirror, or
/// periodic wrap).
inline ScalarField laplacian(const ScalarField& field, const BoundaryConditions& bc) {
    const Grid& g = field.grid();
    bc.validate(g);
    const int nx = g.nx();
    const int nz = g.nz();
    const double ix2 = 1.0 / (g.dx() * g.dx());
    const double iz2 = 1.0 / (g.dz() * g.dz());
    ScalarField out(g);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nz; ++j) {
            const double c = field(i, j);
            double west, east;
            if (i > 0) west = field(i - 1, j);
            else if (bc.periodic_x()) west = field(nx - 1, j);
            else west = detail::ghost(bc.west(), c, bc.west_value(j));
            if (i < nx - 1) east = field(i + 1, j);
            else if (bc.periodic_x()) east = field(0, j);
            else east = detail::ghost(bc.east(), c, 0.0);
            const double south = j > 0 ? field(i, j - 1) : detail::ghost(bc.vertical(), c, 0.0);
            const double north = j < nz - 1 ? field(i, j + 1) : detail::ghost(bc.vertical(), c, 0.0);
            out(i, j) = (west - 2.0 * c + east) * ix2 + (south - 2.0 * c + north) * iz2;
        }
    }
    return out;
}

/// Cumulative z-integral by the cell rule: value at (i, j) is
/// dz * sum_{j' <= j} field(i, j'), i.e. the integral up to the upper face
/// of cell j. At j = nz - 1 this is the composite midpoint rule on [0,1].
inline ScalarField column_cumulative_integral(const ScalarField& field) {
    const Grid& g = field.grid();
    ScalarField out(g);
    for (int i = 0; i < g.nx(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < g.nz(); ++j) {
            acc += field(i, j);
            out(i, j) = acc * g.dz();
        }
    }
    return out;
}

/// Single column level of the cumulative integral.
inline double column_cumulative_integral(const ScalarField& field, int i, int j_top) {
    double acc = 0.0;
    for (int j = 0; j <= j_top; ++j) acc += field(i, j);
    return acc * field.grid().dz();
}

/// Discrete inner product sum u v dx dz.
inline double inner(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) s += a[k] * b[k];
    return s * a.grid().cell_area();
}

inline double norm_l2_squared(const ScalarField& a) { return inner(a, a); }

/// Squared discrete H1 seminorm matching `laplacian`: for homogeneous
/// boundary data, -<laplacian(v), v> equals this value. Dirichlet boundary
/// faces contribute 2 (v - g)^2 / h^2 per cell.
inline double gradient_norm_squared(const ScalarField& v, const BoundaryConditions& bc,
                                    bool homogeneous = true) {
    const Grid& g = v.grid();
    const int nx = g.nx();
    const int nz = g.nz();
    const double ix2 = 1.0 / (g.dx() * g.dx());
    const double iz2 = 1.0 / (g.dz() * g.dz());
    double s = 0.0;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nz; ++j) {
            const double c = v(i, j);
            if (i < nx - 1) {
                const double d = v(i + 1, j) - c;
                s += d * d * ix2;
            } else if (bc.periodic_x()) {
                const double d = v(0, j) - c;
                s += d * d * ix2;
            } else if (bc.east() == SideKind::dirichlet) {
                s += 2.0 * c * c * ix2;
            }
            if (i == 0 && bc.west() == SideKind::dirichlet) {
                const double d = c - (homogeneous ? 0.0 : bc.west_value(j));
                s += 2.0 * d * d * ix2;
            }
            if (j < nz - 1) {
                const double d = v(i, j + 1) - c;
                s += d * d * iz2;
            }
            if (bc.vertical() == SideKind::dirichlet) {
                if (j == 0) s += 2.0 * c * c * iz2;
                if (j == nz - 1) s += 2.0 * c * c * iz2;
            }
        }
    }
    return s * g.cell_area();
}

}  // namespace bve
