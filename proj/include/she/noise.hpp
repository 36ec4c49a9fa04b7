#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "she/errors.hpp"
#include "she/grid.hpp"

namespace she {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless keyed generator: two independent 64-bit words per counter.
inline void counter_words(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                          std::uint64_t cell, std::uint64_t& w1, std::uint64_t& w2) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ path);
    h = splitmix64(h ^ step);
    h = splitmix64(h ^ cell);
    w1 = splitmix64(h);
    w2 = splitmix64(h ^ 0xda942042e4dd58b5ULL);
}

/// One standard Gaussian from the counter via Box-Muller (cosine branch).
inline double counter_gaussian(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                               std::uint64_t cell) {
    std::uint64_t w1, w2;
    counter_words(seed, path, step, cell, w1, w2);
    // u1 in (0,1], u2 in [0,1)
    const double u1 = 1.0 - static_cast<double>(w1 >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(w2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace detail

enum class NoiseMode { fresh, replay };

/// Reproducible discrete space-time white noise. Each increment is an
/// independent N(0, dt*dx) value determined by (seed, path_index, step, cell),
/// so replaying a plan is bit-identical and all runs sharing a plan are
/// exactly coupled.
struct NoisePlan {
    std::uint64_t seed = 0;
    std::int64_t path_index = 0;
    NoiseMode mode = NoiseMode::fresh;
    // replay storage, row-major step x interior cell
    const std::vector<double>* storage = nullptr;
    std::int64_t storage_steps = 0;

    NoisePlan() = default;
    NoisePlan(std::uint64_t seed_, std::int64_t path) : seed(seed_), path_index(path) {}

    static NoisePlan replay(const std::vector<double>& record, std::int64_t n_steps) {
        NoisePlan p;
        p.mode = NoiseMode::replay;
        p.storage = &record;
        p.storage_steps = n_steps;
        return p;
    }
};

/// i.i.d. N(0, dt*dx) increments for one time step, one per interior cell.
inline void increments(const NoisePlan& plan, const GridConfig& grid, std::int64_t step_index,
                       std::vector<double>& out) {
    const int n_cells = grid.n_x - 1;
    out.resize(static_cast<std::size_t>(n_cells));
    if (plan.mode == NoiseMode::replay) {
        if (plan.storage == nullptr)
            throw InvariantError("noise replay: no storage attached to plan");
        if (step_index >= plan.storage_steps)
            throw InvariantError("noise replay: step index beyond recorded horizon");
        const std::size_t base = static_cast<std::size_t>(step_index) * n_cells;
        if (base + n_cells > plan.storage->size())
            throw InvariantError("noise replay: record too short");
        std::memcpy(out.data(), plan.storage->data() + base, sizeof(double) * n_cells);
        return;
    }
    const double sd = std::sqrt(grid.dt * grid.dx());
    for (int c = 0; c < n_cells; ++c)
        out[static_cast<std::size_t>(c)] =
            sd * detail::counter_gaussian(plan.seed, static_cast<std::uint64_t>(plan.path_index),
                                          static_cast<std::uint64_t>(step_index),
                                          static_cast<std::uint64_t>(c));
}

inline std::vector<double> increments(const NoisePlan& plan, const GridConfig& grid,
                                      std::int64_t step_index) {
    std::vector<double> out;
    increments(plan, grid, step_index, out);
    return out;
}

// ---------------------------------------------------------------------------
// covariance functional check
// ---------------------------------------------------------------------------

/// A test function phi(t,x) sampled on the step x interior-cell lattice.
using GridTestFunction = std::function<double(double /*t*/, double /*x*/)>;

struct CovarianceReport {
    double empirical = 0.0;
    double analytic = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
    std::int64_t paths = 0;
};

/// Monte Carlo estimate of E[W(phi) W(psi)] against the Riemann sum of
/// the covariance functional  integral of phi*psi dx dt.
inline CovarianceReport covariance_check(std::uint64_t seed, const GridConfig& grid,
                                         const GridTestFunction& phi, const GridTestFunction& psi,
                                         std::int64_t n_paths, std::int64_t n_steps = -1) {
    if (n_paths < 2) throw ConfigError("covariance_check: need at least 2 paths");
    const std::int64_t steps = n_steps > 0 ? n_steps : grid.n_steps();
    const int n_cells = grid.n_x - 1;

    // lattice samples of phi and psi (midpoint-in-time convention: t_n)
    std::vector<double> phi_v(static_cast<std::size_t>(steps) * n_cells);
    std::vector<double> psi_v(static_cast<std::size_t>(steps) * n_cells);
    double analytic = 0.0;
    for (std::int64_t n = 0; n < steps; ++n) {
        const double t = n * grid.dt;
        for (int c = 0; c < n_cells; ++c) {
            const double x = grid.node(c + 1);
            const std::size_t idx = static_cast<std::size_t>(n) * n_cells + c;
            phi_v[idx] = phi(t, x);
            psi_v[idx] = psi(t, x);
            analytic += phi_v[idx] * psi_v[idx];
        }
    }
    analytic *= grid.dt * grid.dx();

    double sum = 0.0, sumsq = 0.0;
    std::vector<double> dw;
    for (std::int64_t p = 0; p < n_paths; ++p) {
        NoisePlan plan(seed, p);
        double w_phi = 0.0, w_psi = 0.0;
        for (std::int64_t n = 0; n < steps; ++n) {
            increments(plan, grid, n, dw);
            const std::size_t base = static_cast<std::size_t>(n) * n_cells;
            for (int c = 0; c < n_cells; ++c) {
                w_phi += phi_v[base + c] * dw[static_cast<std::size_t>(c)];
                w_psi += psi_v[base + c] * dw[static_cast<std::size_t>(c)];
            }
        }
        const double prod = w_phi * w_psi;
        sum += prod;
        sumsq += prod * prod;
    }
    CovarianceReport rep;
    rep.paths = n_paths;
    rep.analytic = analytic;
    rep.empirical = sum / n_paths;
    const double var = std::max(0.0, sumsq / n_paths - rep.empirical * rep.empirical);
    rep.std_error = std::sqrt(var / n_paths);
    rep.z_score = rep.std_error > 0.0 ? (rep.empirical - rep.analytic) / rep.std_error : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// binary noise record (little-endian doubles, 80-byte header)
// ---------------------------------------------------------------------------

// header layout (80 bytes):
//   magic[8] "SHENOISE", version u32, flags u32, seed u64, path i64,
//   n_steps u64, n_cells u64, L f64, dx f64, dt f64, T f64

struct NoiseRecordHeader {
    std::uint64_t seed = 0;
    std::int64_t path_index = 0;
    std::uint64_t n_steps = 0;
    std::uint64_t n_cells = 0;
    double L = 0.0, dx = 0.0, dt = 0.0, T = 0.0;
};

inline void write_noise_record(const std::string& path, const NoiseRecordHeader& h,
                               const std::vector<double>& data) {
    if (data.size() != h.n_steps * h.n_cells)
        throw InvariantError("noise record: data size does not match header");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("noise record: cannot open " + path + " for writing");
    char header[80] = {};
    std::memcpy(header, "SHENOISE", 8);
    const std::uint32_t version = 1, flags = 0;
    std::memcpy(header + 8, &version, 4);
    std::memcpy(header + 12, &flags, 4);
    std::memcpy(header + 16, &h.seed, 8);
    std::memcpy(header + 24, &h.path_index, 8);
    std::memcpy(header + 32, &h.n_steps, 8);
    std::memcpy(header + 40, &h.n_cells, 8);
    std::memcpy(header + 48, &h.L, 8);
    std::memcpy(header + 56, &h.dx, 8);
    std::memcpy(header + 64, &h.dt, 8);
    std::memcpy(header + 72, &h.T, 8);
    out.write(header, sizeof(header));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw ConfigError("noise record: write failed for " + path);
}

inline NoiseRecordHeader read_noise_record(const std::string& path, std::vector<double>& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("noise record: cannot open " + path);
    char header[80];
    in.read(header, sizeof(header));
    if (!in || std::memcmp(header, "SHENOISE", 8) != 0)
        throw ConfigError("noise record: bad magic in " + path);
    NoiseRecordHeader h;
    std::uint32_t version = 0;
    std::memcpy(&version, header + 8, 4);
    if (version != 1) throw ConfigError("noise record: unsupported version");
    std::memcpy(&h.seed, header + 16, 8);
    std::memcpy(&h.path_index, header + 24, 8);
    std::memcpy(&h.n_steps, header + 32, 8);
    std::memcpy(&h.n_cells, header + 40, 8);
    std::memcpy(&h.L, header + 48, 8);
    std::memcpy(&h.dx, header + 56, 8);
    std::memcpy(&h.dt, header + 64, 8);
    std::memcpy(&h.T, header + 72, 8);
    data.resize(h.n_steps * h.n_cells);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw ConfigError("noise record: truncated data in " + path);
    return h;
}

} // namespace she
