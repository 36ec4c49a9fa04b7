#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "she/errors.hpp"

namespace she {

enum class Boundary { dirichlet_zero };

/// Uniform grid on [-L, L] with n_x cells (n_x+1 nodes) and explicit-scheme
/// time stepping. Construction enforces the stability bound dt <= dx^2/2.
struct GridConfig {
    double L = 8.0;
    int n_x = 512;
    double dt = 0.0;   // 0 requests the default dx^2/3
    double T = 0.5;
    Boundary boundary = Boundary::dirichlet_zero;
    bool clamp_negative = false;
    bool allow_small_domain = false;  // waive the L >= support + 6 sqrt(T) guard

    /// Fields may be assigned freely after default construction; call
    /// finalize() before use (dt == 0 requests the default dx^2/3).
    GridConfig() = default;
    GridConfig(double L_, int n_x_, double dt_, double T_)
        : L(L_), n_x(n_x_), dt(dt_), T(T_) { finalize(); }

    /// Validates the stability bound, then shrinks dt so that T is an exact
    /// multiple (step count rounded up to a multiple of 8, keeping T/2, T/4
    /// snapshots aligned).
    void finalize() {
        if (!(L > 0.0)) throw ConfigError("grid: L must be positive");
        if (n_x < 4) throw ConfigError("grid: n_x must be >= 4");
        if (!(T > 0.0)) throw ConfigError("grid: T must be positive");
        dx_ = 2.0 * L / n_x;
        if (dt == 0.0) dt = dx_ * dx_ / 3.0;
        if (!(dt > 0.0)) throw ConfigError("grid: dt must be positive");
        if (dt > dx_ * dx_ / 2.0 * (1.0 + 1e-12))
            throw ConfigError("grid: stability requires dt <= dx^2/2 = " +
                              std::to_string(dx_ * dx_ / 2.0));
        n_steps_ = 8 * static_cast<std::int64_t>(std::ceil(T / (8.0 * dt) - 1e-12));
        if (n_steps_ < 8) n_steps_ = 8;
        dt = T / static_cast<double>(n_steps_);
    }

    double dx() const {
        if (dx_ == 0.0) throw InvariantError("grid: finalize() was not called");
        return dx_;
    }
    std::int64_t n_steps() const {
        if (dx_ == 0.0) throw InvariantError("grid: finalize() was not called");
        return n_steps_;
    }
    int n_nodes() const { return n_x + 1; }
    double node(int i) const { return -L + dx_ * i; }

    /// Nearest node index for a coordinate, or -1 when off the grid.
    int node_index(double x) const {
        const double fi = (x + L) / dx_;
        const int i = static_cast<int>(std::llround(fi));
        if (i < 0 || i > n_x) return -1;
        if (std::abs(fi - i) > 1e-6) return -1;
        return i;
    }

private:
    double dx_ = 0.0;
    std::int64_t n_steps_ = 0;
};

/// One spatial snapshot u(t, .) on the grid nodes.
struct Field {
    double t = 0.0;
    std::vector<double> values;

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    double max() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double v : values) m = std::max(m, v);
        return m;
    }
    double min() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : values) m = std::min(m, v);
        return m;
    }
};

enum class EdgeSampling {
    cell_average,        // nodal value = overlap of the node's cell with [a,b]
    endpoint_corrected,  // cell average plus the 1/12 endpoint correction
};

/// Indicator initial data height * 1_[a,b] on the grid nodes.
///
/// cell_average keeps values in [0, height] and represents the indicator's
/// mass exactly. endpoint_corrected additionally cancels the O(dx^2)
/// quadrature moment of the jump (weights 5/12 and 13/12 around each edge),
/// which the sharp closed-form heat-flow oracles need; it requires the edges
/// to sit on grid nodes.
inline Field indicator_field(const GridConfig& grid, double a, double b, double height = 1.0,
                             EdgeSampling sampling = EdgeSampling::cell_average) {
    if (!(b > a)) throw ConfigError("indicator_field: requires b > a");
    Field f;
    f.t = 0.0;
    f.values.resize(static_cast<std::size_t>(grid.n_nodes()), 0.0);
    const double h = grid.dx();
    for (int i = 0; i <= grid.n_x; ++i) {
        const double lo = grid.node(i) - 0.5 * h;
        const double hi = grid.node(i) + 0.5 * h;
        const double overlap = std::min(hi, b) - std::max(lo, a);
        if (overlap > 0.0)
            f.values[static_cast<std::size_t>(i)] = height * std::min(1.0, overlap / h);
    }
    if (sampling == EdgeSampling::endpoint_corrected) {
        const int ia = grid.node_index(a), ib = grid.node_index(b);
        if (ia < 0 || ib < 0)
            throw ConfigError("indicator_field: endpoint correction needs edges on grid nodes");
        if (ib - ia < 4)
            throw ConfigError("indicator_field: endpoint correction needs >= 4 cells of support");
        f.values[static_cast<std::size_t>(ia)] = height * (5.0 / 12.0);
        f.values[static_cast<std::size_t>(ia + 1)] = height * (13.0 / 12.0);
        f.values[static_cast<std::size_t>(ib - 1)] = height * (13.0 / 12.0);
        f.values[static_cast<std::size_t>(ib)] = height * (5.0 / 12.0);
    }
    return f;
}

inline Field zero_field(const GridConfig& grid) {
    Field f;
    f.t = 0.0;
    f.values.resize(static_cast<std::size_t>(grid.n_nodes()), 0.0);
    return f;
}

/// Ordered snapshots of one run plus (optionally) the exact noise increments
/// that produced it. `dense` marks a trajectory whose snapshots are every
/// time step, which the time-integral diagnostics require.
struct Trajectory {
    GridConfig grid;
    std::vector<Field> snapshots;
    bool dense = false;
    // row-major step x interior-cell noise increments when recording was on
    std::vector<double> noise_record;
    std::int64_t recorded_steps = 0;
    std::uint64_t seed = 0;
    std::int64_t path_index = 0;
    bool boundary_contact = false;  // |u| at the guard nodes exceeded 1e-8 * max u0

    bool has_noise_record() const { return recorded_steps > 0; }

    const Field& initial() const { return snapshots.front(); }
    const Field& final() const { return snapshots.back(); }

    void validate() const {
        if (snapshots.empty()) throw InvariantError("trajectory: no snapshots");
        for (std::size_t i = 1; i < snapshots.size(); ++i)
            if (!(snapshots[i].t > snapshots[i - 1].t))
                throw InvariantError("trajectory: timestamps must strictly increase");
        for (const auto& f : snapshots)
            if (f.values.size() != static_cast<std::size_t>(grid.n_nodes()))
                throw InvariantError("trajectory: field length does not match grid");
    }
};

/// Per-step observer hook: (step index, time after step, field after step).
using StepHook = std::function<void(std::int64_t, double, const Field&)>;

} // namespace she
