#pragma once

// Reference computations written independently of the library.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double corey_f(double s, double m = 2.0) {
    const double w = m * s * s;
    return w / (w + (1.0 - s) * (1.0 - s));
}

inline double corey_lambda(double s, double m = 2.0) { return m * s * s + (1.0 - s) * (1.0 - s); }

// One explicit upwind step of s_t + f(s)_x = 0 with unit speed, inflow value
// on the left and free outflow on the right.
inline std::vector<double> bl_upwind_step(const std::vector<double>& s, double dt, double dx, double inflow,
                                          double m = 2.0) {
    const std::size_t n = s.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? corey_f(inflow, m) : corey_f(s[i - 1], m);
        out[i] = s[i] - dt / dx * (corey_f(s[i], m) - left);
    }
    return out;
}

// Tridiagonal solve; a is the sub-diagonal (a[0] unused), c the
// super-diagonal (c[n-1] unused).
inline std::vector<double> thomas(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                  std::vector<double> d) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

// Composite Simpson product rule on [0,1]^2 with n (even) intervals per side.
inline double simpson_2d(const std::function<double(double, double)>& fn, int n) {
    const double h = 1.0 / n;
    auto w = [n](int k) { return (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0); };
    double s = 0.0;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) s += w(a) * w(b) * fn(a * h, b * h);
    return s * h * h / 9.0;
}

// Composite trapezoid rule on [lo, hi] with n intervals.
inline double trapezoid(const std::function<double(double)>& fn, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = 0.5 * (fn(lo) + fn(hi));
    for (int k = 1; k < n; ++k) s += fn(lo + k * h);
    return s * h;
}

// Observed order from errors at step sizes h and h/2.
inline double observed_order(double err_h, double err_half) { return std::log2(err_h / err_half); }

}  // namespace oracle
