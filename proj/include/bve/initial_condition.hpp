#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace bve {

/// Initial saturation and the matching inflow profile.
///
/// `injection` is the injection experiment S0(x,z) = g(x) S_in(z) with
/// g(x) = (1-x)^2 / (k x^2 + (1-x)^2), k = 1e5, and S_in = 0.9 on the slab
/// 1/4 < z <= 3/4 (0 elsewhere). `custom` is the same product with a
/// user-chosen plateau and steepness k. `constant` and `bump`
/// (amplitude * sin^2(pi x) sin^2(pi z)) are used by the analysis runs.
struct InitialCondition {
    enum class Kind { injection, constant, custom, bump };

    Kind kind = Kind::injection;
    double plateau = 0.9;
    double steepness = 1e5;
    double value = 0.0;
    double amplitude = 0.8;

    static InitialCondition injection_default() { return {}; }
    static InitialCondition constant(double v) { return {Kind::constant, 0.9, 1e5, v, 0.8}; }
    static InitialCondition bump(double a = 0.8) { return {Kind::bump, 0.9, 1e5, 0.0, a}; }

    double g(double x) const {
        const double s = steepness_used();
        const double w = (1.0 - x) * (1.0 - x);
        return w / (s * x * x + w);
    }

    /// Injected saturation at height z (also the x = 0 boundary value).
    double inflow(double z) const {
        switch (kind) {
        case Kind::constant: return value;
        case Kind::bump: return 0.0;
        case Kind::injection:
        case Kind::custom: break;
        }
        return (z > 0.25 && z <= 0.75) ? plateau_used() : 0.0;
    }

    double eval(double x, double z) const {
        switch (kind) {
        case Kind::constant: return value;
        case Kind::bump: {
            const double sx = std::sin(std::numbers::pi * x);
            const double sz = std::sin(std::numbers::pi * z);
            return amplitude * sx * sx * sz * sz;
        }
        case Kind::injection:
        case Kind::custom: break;
        }
        return g(x) * inflow(z);
    }

    /// Reference level for overshoot measurements.
    double reference_plateau() const {
        switch (kind) {
        case Kind::constant: return value;
        case Kind::bump: return amplitude;
        case Kind::injection:
        case Kind::custom: break;
        }
        return plateau_used();
    }

    /// Cell-centre samples; the slab discontinuity is not smoothed.
    ScalarField sample(const Grid& grid) const {
        ScalarField S = ScalarField::sample(grid, [this](double x, double z) { return eval(x, z); });
        for (double v : S.values())
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("initial saturation outside [0,1]");
        return S;
    }

    std::vector<double> inflow_profile(const Grid& grid) const {
        std::vector<double> out(grid.nz());
        for (int j = 0; j < grid.nz(); ++j) out[j] = inflow(grid.z(j));
        return out;
    }

private:
    double plateau_used() const { return kind == Kind::injection ? 0.9 : plateau; }
    double steepness_used() const { return kind == Kind::injection ? 1e5 : steepness; }
};

inline std::string to_string(InitialCondition::Kind k) {
    switch (k) {
    case InitialCondition::Kind::injection: return "injection";
    case InitialCondition::Kind::constant: return "constant";
    case InitialCondition::Kind::custom: return "custom";
    case InitialCondition::Kind::bump: return "bump";
    }
    return "?";
}

}  // namespace bve
