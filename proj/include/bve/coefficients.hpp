#pragma once

/// \file
/// Constitutive functions of saturation: fractional flow f, nonlinear
/// diffusion H, total mobility lambda_tot and the primitive F of f.
///
/// The default model uses quadratic Corey-type phase mobilities
/// lambda_w = M s^2 and lambda_n = (1 - s)^2, so that
///
///   f(s)     = M s^2 / (M s^2 + (1 - s)^2)
///   H(s)     = M s^2 (1 - s)^2 / (M s^2 + (1 - s)^2)
///   lambda(s) = M s^2 + (1 - s)^2.
///
/// The total mobility is an assumption of this package: it is the unique
/// choice that makes f the wetting fractional flow for lambda_w = M s^2.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace bve {

/// Which set of constitutive functions a CoefficientSet evaluates.
///
/// `corey` is the two-phase model used by the experiments. `linear`
/// (f(s) = s, lambda = 1, H = 1) and `passive` (f = 0, lambda = 1, H = 1)
/// are reference models whose discrete dynamics are affine or trivial; they
/// are defined on the whole real line.
enum class CoefficientModel { corey, linear, passive };

class CoefficientSet {
public:
    static constexpr double domain_tolerance = 1e-12;
    static constexpr int scan_points = 1'000'000;

    explicit CoefficientSet(double viscosity_ratio = 2.0,
                            CoefficientModel model = CoefficientModel::corey)
        : model_(model), m_(viscosity_ratio) {
        if (!(viscosity_ratio > 0.0) || !std::isfinite(viscosity_ratio))
            throw std::invalid_argument("viscosity ratio must be positive and finite");
        scan_bounds();
    }

    static CoefficientSet linear() { return CoefficientSet(1.0, CoefficientModel::linear); }
    static CoefficientSet passive() { return CoefficientSet(1.0, CoefficientModel::passive); }

    CoefficientModel model() const noexcept { return model_; }
    double viscosity_ratio() const noexcept { return m_; }

    /// Lower bound a of the total mobility over [0,1].
    double lambda_floor() const noexcept { return lambda_floor_; }
    /// Upper bound of the total mobility over [0,1].
    double lambda_sup() const noexcept { return lambda_sup_; }
    double lipschitz_f() const noexcept { return lipschitz_f_; }
    double lipschitz_lambda() const noexcept { return lipschitz_lambda_; }

    /// Projection of an arbitrary real onto the domain where the model is
    /// defined. The Corey functions are extended by constants outside [0,1];
    /// the reference models are defined everywhere.
    double to_domain(double s) const noexcept {
        return model_ == CoefficientModel::corey ? std::clamp(s, 0.0, 1.0) : s;
    }

    double frac_flow(double s) const {
        switch (model_) {
        case CoefficientModel::linear: return s;
        case CoefficientModel::passive: return 0.0;
        case CoefficientModel::corey: break;
        }
        s = checked(s);
        const double w = m_ * s * s;
        return w / (w + (1.0 - s) * (1.0 - s));
    }

    double diffusion_H(double s) const {
        if (model_ != CoefficientModel::corey) return 1.0;
        s = checked(s);
        const double w = m_ * s * s;
        const double n = (1.0 - s) * (1.0 - s);
        return w * n / (w + n);
    }

    double total_mobility(double s) const {
        if (model_ != CoefficientModel::corey) return 1.0;
        s = checked(s);
        return m_ * s * s + (1.0 - s) * (1.0 - s);
    }

    double frac_flow_derivative(double s) const {
        switch (model_) {
        case CoefficientModel::linear: return 1.0;
        case CoefficientModel::passive: return 0.0;
        case CoefficientModel::corey: break;
        }
        s = checked(s);
        const double d = m_ * s * s + (1.0 - s) * (1.0 - s);
        return 2.0 * m_ * s * (1.0 - s) / (d * d);
    }

    double total_mobility_derivative(double s) const {
        if (model_ != CoefficientModel::corey) return 0.0;
        s = checked(s);
        return 2.0 * m_ * s - 2.0 * (1.0 - s);
    }

    /// F(s) = int_0^s f(q) dq by adaptive Gauss-Kronrod quadrature.
    double frac_flow_primitive(double s) const {
        switch (model_) {
        case CoefficientModel::linear: return 0.5 * s * s;
        case CoefficientModel::passive: return 0.0;
        case CoefficientModel::corey: break;
        }
        s = checked(s);
        if (s == 0.0) return 0.0;
        double error = 0.0;
        const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [this](double q) { return frac_flow(q); }, 0.0, s, 20, 1e-14, &error);
        if (!(error <= 1e-12))
            throw std::runtime_error("frac_flow_primitive: quadrature did not converge (error estimate " +
                                     std::to_string(error) + ")");
        return value;
    }

private:
    double checked(double s) const {
        if (!(s >= -domain_tolerance && s <= 1.0 + domain_tolerance))
            throw std::domain_error("saturation " + std::to_string(s) + " outside [0,1]");
        return std::clamp(s, 0.0, 1.0);
    }

    void scan_bounds() {
        if (model_ != CoefficientModel::corey) {
            lambda_floor_ = lambda_sup_ = 1.0;
            lipschitz_lambda_ = 0.0;
            lipschitz_f_ = model_ == CoefficientModel::linear ? 1.0 : 0.0;
            return;
        }
        lambda_floor_ = total_mobility(0.0);
        lambda_sup_ = lambda_floor_;
        lipschitz_f_ = 0.0;
        lipschitz_lambda_ = 0.0;
        for (int k = 0; k <= scan_points; ++k) {
            const double s = static_cast<double>(k) / scan_points;
            const double lam = total_mobility(s);
            lambda_floor_ = std::min(lambda_floor_, lam);
            lambda_sup_ = std::max(lambda_sup_, lam);
            lipschitz_f_ = std::max(lipschitz_f_, std::abs(frac_flow_derivative(s)));
            lipschitz_lambda_ = std::max(lipschitz_lambda_, std::abs(total_mobility_derivative(s)));
        }
    }

    CoefficientModel model_;
    double m_;
    double lambda_floor_ = 1.0;
    double lambda_sup_ = 1.0;
    double lipschitz_f_ = 0.0;
    double lipschitz_lambda_ = 0.0;
};

}  // namespace bve
