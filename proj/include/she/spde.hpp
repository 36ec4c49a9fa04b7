#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "she/errors.hpp"
#include "she/grid.hpp"
#include "she/noise.hpp"
#include "she/nonlinearity.hpp"

namespace she {

/// One explicit Euler-Maruyama step of
///   du = 1/2 u_xx dt + sigma(u) dW / dx
/// with dW per interior cell ~ N(0, dt*dx) and zero Dirichlet boundary.
///
/// The noise move is tamed: one step cannot move a node by more than its
/// diffused value, so a nonnegative field stays nonnegative and the front
/// cannot be noise-amplified beyond the scheme's resolution (for a Lipschitz
/// coefficient at desk grids the cap needs a >6.5-sigma draw and the update
/// is the plain explicit formula, bit for bit). `dw` is rewritten in place
/// with the increments actually applied, so a recorded run replays exactly
/// and the discrete weak form holds against the record to round-off.
///
/// Throws BlowupError on a non-finite result.
inline void spde_step(const GridConfig& grid, const NonlinearitySpec& spec,
                      const std::vector<double>& u, std::vector<double>& dw,
                      std::int64_t step_index, std::vector<double>& out) {
    const int n = grid.n_x;
    const double lam = grid.dt / (grid.dx() * grid.dx());
    const double inv_dx = 1.0 / grid.dx();
    out.resize(u.size());
    out[0] = 0.0;
    out[static_cast<std::size_t>(n)] = 0.0;
    for (int i = 1; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double diffused = u[k] + 0.5 * lam * (u[k + 1] - 2.0 * u[k] + u[k - 1]);
        const double sig = spec.eval(u[k]);
        double inc = sig * dw[k - 1] * inv_dx;
        const double cap = std::max(diffused, 0.0);
        if (inc > cap || inc < -cap) {
            inc = std::clamp(inc, -cap, cap);
            dw[k - 1] = sig > 0.0 ? inc * grid.dx() / sig : dw[k - 1];
        }
        double v = diffused + inc;
        if (grid.clamp_negative && v < 0.0) v = 0.0;
        if (!std::isfinite(v))
            throw BlowupError(step_index, i, (step_index + 1) * grid.dt, grid.node(i));
        out[k] = v;
    }
}

struct SimulateOptions {
    bool record_noise = false;
    bool dense = false;  // keep a snapshot at every step
    StepHook hook;       // called after each step
};

namespace detail {

inline std::vector<std::int64_t> snapshot_steps(const GridConfig& grid,
                                                const std::vector<double>& times) {
    std::vector<std::int64_t> steps;
    steps.reserve(times.size());
    for (double t : times) {
        if (t < 0.0 || t > grid.T * (1.0 + 1e-12))
            throw ConfigError("snapshot time outside [0, T]");
        const double f = t / grid.dt;
        const std::int64_t s = static_cast<std::int64_t>(std::llround(f));
        if (std::abs(f - s) > 1e-6)
            throw ConfigError("snapshot time " + std::to_string(t) +
                              " is not aligned to a step multiple of dt");
        if (!steps.empty() && s <= steps.back())
            throw ConfigError("snapshot times must strictly increase");
        steps.push_back(s);
    }
    return steps;
}

inline void check_domain_guard(const GridConfig& grid, const Field& u0) {
    if (grid.allow_small_domain) return;
    const double m = u0.max_abs();
    if (m == 0.0) return;
    double support = 0.0;
    for (int i = 0; i <= grid.n_x; ++i)
        if (std::abs(u0.values[static_cast<std::size_t>(i)]) > 0.0)
            support = std::max(support, std::abs(grid.node(i)));
    if (grid.L < support + 6.0 * std::sqrt(grid.T))
        throw ConfigError("grid: L must exceed initial support half-width + 6 sqrt(T) = " +
                          std::to_string(support + 6.0 * std::sqrt(grid.T)) +
                          " (set allow_small_domain to override)");
}

} // namespace detail

/// Run the stochastic solver from u0 to T, keeping snapshots at the requested
/// times (t=0 is always included as the first snapshot).
inline Trajectory simulate(const Field& u0, const NonlinearitySpec& spec, const GridConfig& grid,
                           const NoisePlan& plan, const std::vector<double>& snapshot_times,
                           const SimulateOptions& opts = {}) {
    if (u0.values.size() != static_cast<std::size_t>(grid.n_nodes()))
        throw InvariantError("simulate: u0 length does not match grid");
    detail::check_domain_guard(grid, u0);
    const auto snap_steps = detail::snapshot_steps(grid, snapshot_times);

    Trajectory traj;
    traj.grid = grid;
    traj.dense = opts.dense;
    traj.seed = plan.seed;
    traj.path_index = plan.path_index;

    const std::int64_t n_steps = grid.n_steps();
    const int n_cells = grid.n_x - 1;
    if (opts.record_noise) {
        traj.noise_record.resize(static_cast<std::size_t>(n_steps) * n_cells);
        traj.recorded_steps = n_steps;
    }

    Field cur = u0;
    cur.t = 0.0;
    traj.snapshots.push_back(cur);

    const double guard_level = 1e-8 * u0.max_abs();
    std::vector<double> dw, next;
    std::size_t snap_pos = 0;
    while (snap_pos < snap_steps.size() && snap_steps[snap_pos] == 0) ++snap_pos;

    for (std::int64_t s = 0; s < n_steps; ++s) {
        increments(plan, grid, s, dw);
        if (opts.record_noise)
            std::copy(dw.begin(), dw.end(),
                      traj.noise_record.begin() + static_cast<std::ptrdiff_t>(s) * n_cells);
        spde_step(grid, spec, cur.values, dw, s, next);
        cur.values.swap(next);
        cur.t = (s + 1) * grid.dt;

        if (guard_level > 0.0 &&
            (std::abs(cur.values[1]) > guard_level ||
             std::abs(cur.values[static_cast<std::size_t>(grid.n_x - 1)]) > guard_level))
            traj.boundary_contact = true;

        if (opts.hook) opts.hook(s, cur.t, cur);
        if (opts.dense) {
            traj.snapshots.push_back(cur);
        } else if (snap_pos < snap_steps.size() && snap_steps[snap_pos] == s + 1) {
            traj.snapshots.push_back(cur);
            ++snap_pos;
        }
    }
    traj.validate();
    return traj;
}

/// Same run with the truncated coefficient sigma^(m).
inline Trajectory simulate_truncated(const Field& u0, const NonlinearitySpec& spec, int m,
                                     const GridConfig& grid, const NoisePlan& plan,
                                     const std::vector<double>& snapshot_times,
                                     const SimulateOptions& opts = {}) {
    return simulate(u0, spec.with_truncation(m), grid, plan, snapshot_times, opts);
}

/// Two runs driven by the identical noise plan, initial data ordered
/// u0_hi >= u0_lo pointwise (checked).
inline std::pair<Trajectory, Trajectory> coupled_simulate(
    const Field& u0_hi, const Field& u0_lo, const NonlinearitySpec& spec, const GridConfig& grid,
    const NoisePlan& plan, const std::vector<double>& snapshot_times,
    const SimulateOptions& opts = {}) {
    if (u0_hi.values.size() != u0_lo.values.size())
        throw InvariantError("coupled_simulate: initial fields differ in size");
    for (std::size_t i = 0; i < u0_hi.values.size(); ++i)
        if (u0_hi.values[i] < u0_lo.values[i])
            throw InvariantError("coupled_simulate: u0_hi must dominate u0_lo pointwise");
    auto hi = simulate(u0_hi, spec, grid, plan, snapshot_times, opts);
    auto lo = simulate(u0_lo, spec, grid, plan, snapshot_times, opts);
    return {std::move(hi), std::move(lo)};
}

// ---------------------------------------------------------------------------
// truncation convergence study
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    int m = 0;
    double sup_distance = 0.0;     // max over paths, snapshots, nodes
    double ensemble_l2 = 0.0;      // max over (t,x) of sqrt(mean_p diff^2)
};

struct ConvergenceStudy {
    int reference_m = 0;
    std::int64_t n_paths = 0;
    std::vector<ConvergenceRow> rows;
};

/// Sup distances of the truncated runs u^(m) against a reference level, all
/// paths driven by one shared plan seed per path index.
inline ConvergenceStudy convergence_study(const Field& u0, const NonlinearitySpec& spec,
                                          const GridConfig& grid, std::uint64_t seed,
                                          const std::vector<int>& m_list, int reference_m,
                                          const std::vector<double>& snapshot_times,
                                          std::int64_t n_paths = 1) {
    for (int m : m_list)
        if (m >= reference_m)
            throw ConfigError("convergence_study: reference_m must exceed every m in the list");
    if (n_paths < 1) throw ConfigError("convergence_study: need at least one path");

    ConvergenceStudy study;
    study.reference_m = reference_m;
    study.n_paths = n_paths;
    study.rows.resize(m_list.size());
    for (std::size_t j = 0; j < m_list.size(); ++j) study.rows[j].m = m_list[j];

    const std::size_t n_nodes = static_cast<std::size_t>(grid.n_nodes());
    // accumulated squared differences per (m, snapshot, node); sized on first run
    std::vector<std::vector<double>> sumsq(m_list.size());

    for (std::int64_t p = 0; p < n_paths; ++p) {
        NoisePlan plan(seed, p);
        const Trajectory ref = simulate_truncated(u0, spec, reference_m, grid, plan, snapshot_times);
        if (sumsq[0].empty())
            for (auto& v : sumsq) v.assign(ref.snapshots.size() * n_nodes, 0.0);
        for (std::size_t j = 0; j < m_list.size(); ++j) {
            const Trajectory run = simulate_truncated(u0, spec, m_list[j], grid, plan, snapshot_times);
            double sup = study.rows[j].sup_distance;
            for (std::size_t si = 0; si < ref.snapshots.size(); ++si) {
                for (std::size_t i = 0; i < n_nodes; ++i) {
                    const double diff = run.snapshots[si].values[i] - ref.snapshots[si].values[i];
                    sup = std::max(sup, std::abs(diff));
                    sumsq[j][si * n_nodes + i] += diff * diff;
                }
            }
            study.rows[j].sup_distance = sup;
        }
    }
    for (std::size_t j = 0; j < m_list.size(); ++j) {
        double worst = 0.0;
        for (double s : sumsq[j]) worst = std::max(worst, s);
        study.rows[j].ensemble_l2 = std::sqrt(worst / static_cast<double>(n_paths));
    }
    return study;
}

} // namespace she
