#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "she/errors.hpp"
#include "she/quadrature.hpp"

namespace she {

/// Gaussian heat kernel G(t,x) = exp(-x^2/(2t)) / sqrt(2 pi t), t > 0.
inline double heat_kernel(double t, double x) {
    if (!(t > 0.0)) throw ConfigError("heat_kernel: t must be positive");
    return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

/// Standard normal CDF via erfc; relative accuracy ~1e-16 in both tails.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Closed form of the spatial L2 mass: integral of G(t,.)^2 = (4 pi t)^-1/2.
inline double kernel_l2_mass(double t) {
    if (!(t > 0.0)) throw ConfigError("kernel_l2_mass: t must be positive");
    return 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
}

/// Quadrature cross-check of kernel_l2_mass.
inline double kernel_l2_mass_quadrature(double t, int panels = 96) {
    if (!(t > 0.0)) throw ConfigError("kernel_l2_mass_quadrature: t must be positive");
    const double half_width = 9.0 * std::sqrt(t);
    return integrate([t](double x) { const double g = heat_kernel(t, x); return g * g; },
                     -half_width, half_width, panels);
}

/// (G(t,.) * 1_[-r,r])(x) = Phi((x+r)/sqrt t) - Phi((x-r)/sqrt t).
inline double convolve_indicator(double t, double r, double x) {
    if (!(t > 0.0)) throw ConfigError("convolve_indicator: t must be positive");
    if (!(r > 0.0)) throw ConfigError("convolve_indicator: r must be positive");
    const double s = std::sqrt(t);
    return normal_cdf((x + r) / s) - normal_cdf((x - r) / s);
}

/// Outcome of minimizing the indicator convolution over the propagation strip
/// s in [T/(2m), T/m], |x| <= r + M/m, compared against the level 2*eta.
struct PropagationReport {
    double inf_value = 0.0;
    double arg_s = 0.0;
    double arg_x = 0.0;
    bool satisfied = false;
};

/// Checks inf over the strip of (G(s,.)*1_[-r,r])(x) >= 2*eta.
/// The objective is even in x and nonincreasing in |x|, so only x >= 0 is
/// scanned; a coarse grid is refined by golden-section in each variable.
inline PropagationReport propagation_lower_bound(double T, double M, double eta, double r, int m) {
    if (!(T > 0.0 && M > 0.0 && r > 0.0))
        throw ConfigError("propagation_lower_bound: T, M, r must be positive");
    if (!(eta > 0.0 && eta < 0.25))
        throw ConfigError("propagation_lower_bound: eta must lie in (0, 1/4)");
    if (m < 1) throw ConfigError("propagation_lower_bound: m must be >= 1");

    const double s_lo = T / (2.0 * m), s_hi = T / m;
    const double x_hi = r + M / m;
    const int n = 64;

    PropagationReport rep;
    rep.inf_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const double s = s_lo + (s_hi - s_lo) * i / n;
        for (int j = 0; j <= n; ++j) {
            const double x = x_hi * j / n;
            const double v = convolve_indicator(s, r, x);
            if (v < rep.inf_value) { rep.inf_value = v; rep.arg_s = s; rep.arg_x = x; }
        }
    }

    // golden-section refinement around the grid minimum, one variable at a time
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    auto golden = [&](auto f, double a, double b) {
        double c = b - gr * (b - a), d = a + gr * (b - a);
        for (int it = 0; it < 60; ++it) {
            if (f(c) < f(d)) { b = d; } else { a = c; }
            c = b - gr * (b - a);
            d = a + gr * (b - a);
        }
        return 0.5 * (a + b);
    };
    const double ds = (s_hi - s_lo) / n, dx = x_hi / n;
    for (int sweep = 0; sweep < 2; ++sweep) {
        const double x0 = rep.arg_x;
        rep.arg_s = golden([&](double s) { return convolve_indicator(s, r, x0); },
                           std::max(s_lo, rep.arg_s - ds), std::min(s_hi, rep.arg_s + ds));
        const double s0 = rep.arg_s;
        rep.arg_x = golden([&](double x) { return convolve_indicator(s0, r, x); },
                           std::max(0.0, rep.arg_x - dx), std::min(x_hi, rep.arg_x + dx));
        rep.inf_value = std::min(rep.inf_value, convolve_indicator(rep.arg_s, r, rep.arg_x));
    }
    rep.satisfied = rep.inf_value >= 2.0 * eta;
    return rep;
}

} // namespace she
