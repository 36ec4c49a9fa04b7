#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

#include "she/errors.hpp"

namespace she {

// 16-point Gauss-Legendre nodes/weights on [-1,1] (positive half; mirror for the rest).
namespace detail {
inline constexpr std::array<double, 8> gl16_x = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
inline constexpr std::array<double, 8> gl16_w = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};
} // namespace detail

/// 16-point Gauss-Legendre quadrature of f over [a,b].
template <typename F>
double gauss_legendre_16(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        const double dx = h * detail::gl16_x[i];
        sum += detail::gl16_w[i] * (f(c - dx) + f(c + dx));
    }
    return h * sum;
}

/// Composite Gauss-Legendre over [a,b] split into n panels.
template <typename F>
double integrate(F&& f, double a, double b, int n_panels = 64) {
    if (n_panels < 1) throw ConfigError("integrate: n_panels must be >= 1");
    const double h = (b - a) / n_panels;
    double sum = 0.0;
    for (int k = 0; k < n_panels; ++k)
        sum += gauss_legendre_16(f, a + k * h, a + (k + 1) * h);
    return sum;
}

/// Result of the dyadic-panel improper integral of f over (0, 1].
/// Panels are [2^-(k+1), 2^-k]; the tail below 2^-max_level is classified by
/// the decay of the panel sums and either extrapolated or flagged divergent.
struct DyadicIntegral {
    double value = 0.0;      // partial sum + tail extrapolation (when convergent)
    bool divergent = false;  // panel sums do not decay summably
    double tail_estimate = 0.0;
    double last_panel = 0.0;
    int panels_used = 0;
};

/// Integrate f over (0,1] where f may blow up at 0 monotonically.
/// Geometric panel decay is extrapolated exactly; polynomial decay in the
/// panel index is classified by a fitted exponent (convergent iff > 1).
template <typename F>
DyadicIntegral integrate_dyadic_to_zero(F&& f, int max_level = 200) {
    DyadicIntegral out;
    double prev = 0.0;
    double sum = 0.0;
    std::array<double, 8> tail_panels{}; // last few panel integrals for the fit
    int n_tail = 0;
    int k = 0;
    for (; k < max_level; ++k) {
        const double hi = std::pow(2.0, -k);
        const double lo = 0.5 * hi;
        const double panel = gauss_legendre_16(f, lo, hi);
        sum += panel;
        out.last_panel = panel;
        if (!std::isfinite(sum)) { out.divergent = true; break; }
        tail_panels[static_cast<std::size_t>(n_tail % 8)] = panel;
        ++n_tail;
        if (panel == 0.0) { out.panels_used = k + 1; out.value = sum; return out; }
        // geometric decay: extrapolate remaining tail and stop
        if (k >= 8) {
            const double r = panel / prev;
            if (r < 0.95 && r > 0.0) {
                // check the ratio is stable over the last couple of panels
                if (panel < 1e-14 * std::abs(sum) || k > 40) {
                    out.tail_estimate = panel * r / (1.0 - r);
                    out.value = sum + out.tail_estimate;
                    out.panels_used = k + 1;
                    return out;
                }
            }
        }
        prev = panel;
    }
    out.panels_used = k;
    if (out.divergent) return out;
    // no geometric cutoff reached: classify by panel-index decay exponent
    // I_k ~ k^-p  =>  convergent iff p > 1
    const double i1 = tail_panels[static_cast<std::size_t>((n_tail - 1) % 8)];
    const double i0 = tail_panels[static_cast<std::size_t>((n_tail - 5) % 8)];
    const double k1 = static_cast<double>(n_tail - 1);
    const double k0 = static_cast<double>(n_tail - 5);
    if (i0 <= 0.0 || i1 <= 0.0) { out.value = sum; return out; }
    const double p = -(std::log(i1) - std::log(i0)) / (std::log(k1) - std::log(k0));
    if (p > 1.05) {
        // p-series tail bound: sum_{j>k1} (j/k1)^-p * I_k1 ~ I_k1 * k1/(p-1)
        out.tail_estimate = i1 * k1 / (p - 1.0);
        out.value = sum + out.tail_estimate;
    } else {
        out.divergent = true;
        out.value = sum;
    }
    return out;
}

} // namespace she
