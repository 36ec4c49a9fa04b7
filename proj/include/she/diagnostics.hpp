#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "she/errors.hpp"
#include "she/grid.hpp"
#include "she/nonlinearity.hpp"

namespace she {

// ---------------------------------------------------------------------------
// support radius
// ---------------------------------------------------------------------------

struct SupportRadius {
    double r_minus = 0.0;
    double r_plus = 0.0;
};

/// Leftmost/rightmost node with value strictly above `threshold`, widened by
/// half a cell; nullopt when the whole field sits below the threshold.
/// Stochastic runs use threshold = theta_rel * max(u0) (default 1e-10);
/// deterministic runs use the absolute exact-zero level 1e-14.
inline std::optional<SupportRadius> support_radius(const GridConfig& grid, const Field& field,
                                                   double threshold) {
    int left = -1, right = -1;
    for (int i = 0; i <= grid.n_x; ++i) {
        if (field.values[static_cast<std::size_t>(i)] > threshold) {
            if (left < 0) left = i;
            right = i;
        }
    }
    if (left < 0) return std::nullopt;
    return SupportRadius{grid.node(left) - 0.5 * grid.dx(), grid.node(right) + 0.5 * grid.dx()};
}

// ---------------------------------------------------------------------------
// positivity window
// ---------------------------------------------------------------------------

struct WindowMin {
    double min_value = std::numeric_limits<double>::infinity();
    bool event = false;  // min_value > theta_pos
};

/// Minimum of the trajectory over [t0,t1] x [x0,x1] and the positivity event
/// indicator min > theta_pos.
inline WindowMin positivity_window_min(const Trajectory& traj, double t0, double t1, double x0,
                                       double x1, double theta_pos) {
    WindowMin wm;
    bool any = false;
    const double eps_t = 1e-12 * std::max(1.0, std::abs(t1));
    for (const auto& f : traj.snapshots) {
        if (f.t < t0 - eps_t || f.t > t1 + eps_t) continue;
        for (int i = 0; i <= traj.grid.n_x; ++i) {
            const double x = traj.grid.node(i);
            if (x < x0 || x > x1) continue;
            any = true;
            wm.min_value = std::min(wm.min_value, f.values[static_cast<std::size_t>(i)]);
        }
    }
    if (!any) throw ConfigError("positivity_window_min: window contains no lattice points");
    wm.event = wm.min_value > theta_pos;
    return wm;
}

// ---------------------------------------------------------------------------
// weighted sup and parabolic Hoelder norm
// ---------------------------------------------------------------------------

inline double cosh_weight(double a, double x) { return 1.0 / std::cosh(a * std::abs(x)); }

/// sup over the grid of |u(x)| / cosh(a|x|).
inline double weighted_sup(const GridConfig& grid, const Field& field, double a) {
    if (!(a > 0.0)) throw ConfigError("weighted_sup: a must be positive");
    double m = 0.0;
    for (int i = 0; i <= grid.n_x; ++i)
        m = std::max(m, std::abs(field.values[static_cast<std::size_t>(i)]) *
                            cosh_weight(a, grid.node(i)));
    return m;
}

/// Weighted parabolic Hoelder norm of the trajectory:
///   sup |Psi_a u|  +  max over sampled pairs of
///   |Psi_a u(s,y) - Psi_a u(s',y')| / (|y-y'|^(1/2) + |s-s'|^(1/4))^(2 gamma),
/// the pairing matching the solution's (1/2-, 1/4-) regularity.
inline double holder_norm(const Trajectory& traj, double a, double gamma,
                          std::int64_t max_pairs = 100000, std::uint64_t seed = 12345) {
    if (!(a > 0.0)) throw ConfigError("holder_norm: a must be positive");
    if (!(gamma > 0.0 && gamma < 0.25))
        throw ConfigError("holder_norm: gamma must lie in (0, 1/4)");
    if (traj.snapshots.size() < 2)
        throw ConfigError("holder_norm: need at least 2 snapshots");

    double sup = 0.0;
    for (const auto& f : traj.snapshots) sup = std::max(sup, weighted_sup(traj.grid, f, a));

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_s(0, traj.snapshots.size() - 1);
    std::uniform_int_distribution<int> pick_i(0, traj.grid.n_x);
    double quot = 0.0;
    for (std::int64_t k = 0; k < max_pairs; ++k) {
        const std::size_t s1 = pick_s(rng), s2 = pick_s(rng);
        const int i1 = pick_i(rng), i2 = pick_i(rng);
        if (s1 == s2 && i1 == i2) continue;
        const auto& f1 = traj.snapshots[s1];
        const auto& f2 = traj.snapshots[s2];
        const double x1 = traj.grid.node(i1), x2 = traj.grid.node(i2);
        const double w1 = f1.values[static_cast<std::size_t>(i1)] * cosh_weight(a, x1);
        const double w2 = f2.values[static_cast<std::size_t>(i2)] * cosh_weight(a, x2);
        const double dist = std::sqrt(std::abs(x1 - x2)) + std::pow(std::abs(f1.t - f2.t), 0.25);
        quot = std::max(quot, std::abs(w1 - w2) / std::pow(dist, 2.0 * gamma));
    }
    return sup + quot;
}

// ---------------------------------------------------------------------------
// boundary time integrals
// ---------------------------------------------------------------------------

struct BoundaryIntegral {
    double u_integral = 0.0;      // trapezoidal integral of u(t, R) dt
    double sigma_integral = 0.0;  // trapezoidal integral of sigma(u(t, R)) dt
};

inline BoundaryIntegral boundary_time_integral(const Trajectory& traj,
                                               const NonlinearitySpec& spec, double R) {
    const int idx = traj.grid.node_index(R);
    if (idx < 0) throw ConfigError("boundary_time_integral: R is not a grid node");
    if (traj.snapshots.size() < 2)
        throw ConfigError("boundary_time_integral: need at least 2 snapshots");
    BoundaryIntegral bi;
    for (std::size_t s = 1; s < traj.snapshots.size(); ++s) {
        const auto& f0 = traj.snapshots[s - 1];
        const auto& f1 = traj.snapshots[s];
        const double h = f1.t - f0.t;
        const double u0 = f0.values[static_cast<std::size_t>(idx)];
        const double u1 = f1.values[static_cast<std::size_t>(idx)];
        bi.u_integral += 0.5 * h * (u0 + u1);
        bi.sigma_integral += 0.5 * h * (spec.eval(u0) + spec.eval(u1));
    }
    return bi;
}

// ---------------------------------------------------------------------------
// quadratic variation outside a boundary
// ---------------------------------------------------------------------------

/// Discrete integral of (x-R)^2 sigma(u(s,x))^2 over [0,T] x (R, L].
inline double quadratic_variation_outside(const Trajectory& traj, const NonlinearitySpec& spec,
                                          double R) {
    const int idx = traj.grid.node_index(R);
    if (idx < 0) throw ConfigError("quadratic_variation_outside: R is not a grid node");
    if (traj.snapshots.size() < 2)
        throw ConfigError("quadratic_variation_outside: need at least 2 snapshots");
    const auto slice = [&](const Field& f) {
        double acc = 0.0;
        for (int i = idx + 1; i <= traj.grid.n_x; ++i) {
            const double w = traj.grid.node(i) - R;
            const double sv = spec.eval(f.values[static_cast<std::size_t>(i)]);
            acc += w * w * sv * sv;
        }
        return acc * traj.grid.dx();
    };
    double qv = 0.0;
    double prev = slice(traj.snapshots.front());
    for (std::size_t s = 1; s < traj.snapshots.size(); ++s) {
        const double cur = slice(traj.snapshots[s]);
        qv += 0.5 * (traj.snapshots[s].t - traj.snapshots[s - 1].t) * (prev + cur);
        prev = cur;
    }
    return qv;
}

struct QvRatioReport {
    double mean_qv_beta_half = 0.0;   // ensemble mean of qv^(beta/2)
    double mean_boundary_beta = 0.0;  // ensemble mean of (integral of u(s,R))^beta
    double bound_ratio = 0.0;         // their ratio, 0 when the denominator is 0
};

/// Ensemble shape check of the quadratic-variation bound: the ratio of
/// E[qv^(beta/2)] to E[(int u(s,R) ds)^beta].
inline QvRatioReport qv_bound_ratio(const std::vector<Trajectory>& ensemble,
                                    const NonlinearitySpec& spec, double R, double beta) {
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("qv_bound_ratio: beta must lie in (0,1)");
    if (ensemble.empty()) throw ConfigError("qv_bound_ratio: empty ensemble");
    QvRatioReport rep;
    for (const auto& traj : ensemble) {
        const double qv = quadratic_variation_outside(traj, spec, R);
        const double bu = boundary_time_integral(traj, spec, R).u_integral;
        rep.mean_qv_beta_half += std::pow(qv, 0.5 * beta);
        rep.mean_boundary_beta += std::pow(std::max(bu, 0.0), beta);
    }
    rep.mean_qv_beta_half /= static_cast<double>(ensemble.size());
    rep.mean_boundary_beta /= static_cast<double>(ensemble.size());
    rep.bound_ratio =
        rep.mean_boundary_beta > 0.0 ? rep.mean_qv_beta_half / rep.mean_boundary_beta : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// moments
// ---------------------------------------------------------------------------

struct MomentEstimate {
    double mean_abs_p = 0.0;
    double std_error = 0.0;  // jackknife
    std::int64_t paths = 0;
};

/// Monte Carlo estimate of E|u(t,x)|^p over an ensemble of trajectories
/// sharing one grid and snapshot schedule.
inline MomentEstimate moment_estimate(const std::vector<Trajectory>& ensemble, double p, double t,
                                      double x) {
    if (p < 2.0) throw ConfigError("moment_estimate: p must be >= 2");
    if (ensemble.size() < 2) throw ConfigError("moment_estimate: need at least 2 paths");
    const auto& g = ensemble.front().grid;
    const int xi = g.node_index(x);
    if (xi < 0) throw ConfigError("moment_estimate: x is not a grid node");
    std::ptrdiff_t si = -1;
    for (std::size_t s = 0; s < ensemble.front().snapshots.size(); ++s)
        if (std::abs(ensemble.front().snapshots[s].t - t) <= 1e-9 * std::max(1.0, t)) {
            si = static_cast<std::ptrdiff_t>(s);
            break;
        }
    if (si < 0) throw ConfigError("moment_estimate: t is not a stored snapshot time");

    std::vector<double> vals;
    vals.reserve(ensemble.size());
    for (const auto& traj : ensemble)
        vals.push_back(std::pow(
            std::abs(traj.snapshots[static_cast<std::size_t>(si)].values[static_cast<std::size_t>(xi)]),
            p));

    const double n = static_cast<double>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n;

    // jackknife over leave-one-out means
    double jk_mean = 0.0;
    std::vector<double> loo(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        loo[i] = (mean * n - vals[i]) / (n - 1.0);
        jk_mean += loo[i];
    }
    jk_mean /= n;
    double var = 0.0;
    for (double v : loo) var += (v - jk_mean) * (v - jk_mean);
    var *= (n - 1.0) / n;

    MomentEstimate est;
    est.mean_abs_p = mean;
    est.std_error = std::sqrt(var);
    est.paths = static_cast<std::int64_t>(vals.size());
    return est;
}

// ---------------------------------------------------------------------------
// discrete weak-form residual
// ---------------------------------------------------------------------------

/// Max over stored steps of the relative defect in the discrete weak identity
///   (u_n, phi) dx = (u_0, phi) dx
///       + sum_j [ dt (u_j, (phi_{i+1}-2phi_i+phi_{i-1})/(2 dx^2)) dx
///                 + sum_i sigma(u_{j,i}) phi_i dW_{j,i} ].
/// Requires a dense trajectory with its noise record; phi must vanish at the
/// boundary nodes. For the unclamped explicit scheme this is pure round-off.
inline double weak_residual(const Trajectory& traj, const NonlinearitySpec& spec,
                            const std::vector<double>& phi) {
    if (!traj.dense) throw InvariantError("weak_residual: trajectory must store every step");
    if (!traj.has_noise_record()) throw InvariantError("weak_residual: noise record missing");
    const auto& g = traj.grid;
    if (phi.size() != static_cast<std::size_t>(g.n_nodes()))
        throw InvariantError("weak_residual: phi length does not match grid");
    if (phi.front() != 0.0 || phi.back() != 0.0)
        throw ConfigError("weak_residual: phi must vanish at the boundary nodes");
    if (static_cast<std::int64_t>(traj.snapshots.size()) != traj.recorded_steps + 1)
        throw InvariantError("weak_residual: snapshot count does not match noise record");

    const double dx = g.dx();
    const int n = g.n_x;
    const int n_cells = n - 1;

    auto pair_dx = [&](const std::vector<double>& u) {
        double acc = 0.0;
        for (int i = 1; i < n; ++i) acc += u[static_cast<std::size_t>(i)] * phi[static_cast<std::size_t>(i)];
        return acc * dx;
    };
    // (u, L phi) dx with L phi the centered second difference over 2 dx^2
    auto pair_lphi = [&](const std::vector<double>& u) {
        double acc = 0.0;
        for (int i = 1; i < n; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            acc += u[k] * (phi[k + 1] - 2.0 * phi[k] + phi[k - 1]);
        }
        return acc / (2.0 * dx * dx) * dx;
    };

    double rhs = pair_dx(traj.snapshots.front().values);
    double scale = std::abs(rhs);
    double worst = 0.0;
    for (std::int64_t j = 0; j < traj.recorded_steps; ++j) {
        const auto& uj = traj.snapshots[static_cast<std::size_t>(j)].values;
        const double drift = g.dt * pair_lphi(uj);
        double noise = 0.0;
        const std::size_t base = static_cast<std::size_t>(j) * n_cells;
        for (int i = 1; i < n; ++i)
            noise += spec.eval(uj[static_cast<std::size_t>(i)]) * phi[static_cast<std::size_t>(i)] *
                     traj.noise_record[base + static_cast<std::size_t>(i - 1)];
        rhs += drift + noise;
        scale += std::abs(drift) + std::abs(noise);
        const double lhs = pair_dx(traj.snapshots[static_cast<std::size_t>(j + 1)].values);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-300));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// comparison statistics
// ---------------------------------------------------------------------------

struct ComparisonStats {
    double violated_fraction = 0.0;
    double worst_violation = 0.0;  // most negative (hi - lo), 0 when ordered
    std::int64_t points = 0;
    double tolerance = 0.0;
};

/// Fraction of space-time lattice points with u_hi - u_lo < -tol, where
/// tol = 1e-8 * max(u0_hi).
inline ComparisonStats comparison_stats(const Trajectory& hi, const Trajectory& lo) {
    if (hi.grid.n_x != lo.grid.n_x || hi.grid.L != lo.grid.L ||
        hi.snapshots.size() != lo.snapshots.size())
        throw InvariantError("comparison_stats: trajectories do not share grid/schedule");
    ComparisonStats cs;
    cs.tolerance = 1e-8 * hi.initial().max();
    double worst = 0.0;
    std::int64_t bad = 0, total = 0;
    for (std::size_t s = 0; s < hi.snapshots.size(); ++s) {
        if (std::abs(hi.snapshots[s].t - lo.snapshots[s].t) > 1e-12)
            throw InvariantError("comparison_stats: snapshot times differ");
        const auto& a = hi.snapshots[s].values;
        const auto& b = lo.snapshots[s].values;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double diff = a[i] - b[i];
            worst = std::min(worst, diff);
            if (diff < -cs.tolerance) ++bad;
            ++total;
        }
    }
    cs.worst_violation = worst;
    cs.points = total;
    cs.violated_fraction = total > 0 ? static_cast<double>(bad) / static_cast<double>(total) : 0.0;
    return cs;
}

} // namespace she
