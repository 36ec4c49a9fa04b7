// she - experiment driver for the 1-D stochastic heat equation toolkit.
//
// Subcommands: simulate, deterministic, conditions, converge, compare,
// propagation, sweep. Every run writes a manifest.txt with the resolved
// configuration; rerunning with that manifest as --config reproduces every
// output byte, and --threads never changes any output byte.
//
// Exit codes: 0 ok, 2 config error, 3 numerical blow-up, 4 invariant-gate
// failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "she/she.hpp"

namespace fs = std::filesystem;
using namespace she;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> paths;
    std::optional<int> threads;
    std::optional<std::string> out;

    std::optional<double> gamma, beta, gamma2, c, eta, alpha, dt, T, grid_L;
    std::optional<std::int64_t> m, k, grid_nx, k_max;
    std::optional<std::string> family, snapshots, table;
};

void overlay_flags(KeyValueDoc& doc, const Flags& f) {
    if (f.seed) doc.set_int("seed", static_cast<std::int64_t>(*f.seed));
    if (f.paths) doc.set_int("paths", *f.paths);
    if (f.family) doc.set("family", *f.family);
    if (f.gamma) doc.set_double("gamma", *f.gamma);
    if (f.beta) doc.set_double("beta", *f.beta);
    if (f.gamma2) doc.set_double("gamma2", *f.gamma2);
    if (f.c) doc.set_double("c", *f.c);
    if (f.table) doc.set("table", *f.table);
    if (f.m) doc.set_int("m", *f.m);
    if (f.eta) doc.set_double("eta", *f.eta);
    if (f.k) doc.set_int("k", *f.k);
    if (f.alpha) doc.set_double("alpha", *f.alpha);
    if (f.k_max) doc.set_int("k_max", *f.k_max);
    if (f.grid_nx) doc.set_int("grid_nx", *f.grid_nx);
    if (f.grid_L) doc.set_double("grid_L", *f.grid_L);
    if (f.dt) doc.set_double("dt", *f.dt);
    if (f.T) doc.set_double("T", *f.T);
    if (f.snapshots) doc.set("snapshots", *f.snapshots);
}

KeyValueDoc load_config(const Flags& f) {
    KeyValueDoc doc;
    if (!f.config.empty()) doc = KeyValueDoc::parse_file(f.config);
    overlay_flags(doc, f);
    return doc;
}

GridConfig grid_from(const KeyValueDoc& doc, int def_nx = 512, double def_T = 0.5) {
    GridConfig g;
    g.L = doc.get_double_or("grid_L", 8.0);
    g.n_x = static_cast<int>(doc.get_int_or("grid_nx", def_nx));
    g.dt = doc.get_double_or("dt", 0.0);
    g.T = doc.get_double_or("T", def_T);
    g.clamp_negative = doc.get_int_or("clamp_negative", 0) != 0;
    g.allow_small_domain = doc.get_int_or("allow_small_domain", 0) != 0;
    g.finalize();
    return g;
}

// Family can be inferred from which coefficient keys are present.
NonlinearitySpec spec_from(const KeyValueDoc& doc) {
    if (doc.has("family")) return spec_from_keyvalues(doc);
    KeyValueDoc d = doc;
    if (doc.has("beta"))
        d.set("family", "logcorrected");
    else if (doc.has("c"))
        d.set("family", "linear");
    else if (doc.has("table"))
        d.set("family", "tabulated");
    else {
        d.set("family", "powerlaw");
        if (!doc.has("gamma")) d.set_double("gamma", 0.5);
    }
    return spec_from_keyvalues(d);
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_double(item, what));
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        out.push_back(static_cast<int>(parse_int(item, what)));
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

std::vector<double> snapshots_from(const KeyValueDoc& doc, const GridConfig& g) {
    if (doc.has("snapshots")) return parse_double_list(doc.get("snapshots"), "snapshots");
    return {0.5 * g.T, g.T};
}

Field u0_from(const KeyValueDoc& doc, const GridConfig& g) {
    const double a = doc.get_double_or("u0_a", -1.0);
    const double b = doc.get_double_or("u0_b", 1.0);
    const double h = doc.get_double_or("u0_height", 1.0);
    const auto mode = doc.get_or("u0_sampling", "cell_average") == "endpoint_corrected"
                          ? EdgeSampling::endpoint_corrected
                          : EdgeSampling::cell_average;
    return indicator_field(g, a, b, h, mode);
}

/// Writes manifest.txt: build id + the resolved configuration, minus keys
/// that cannot affect output bytes (threads, out).
void write_manifest(const fs::path& dir, const std::string& subcommand, const KeyValueDoc& doc) {
    KeyValueDoc m;
    m.set("she_version", kVersion);
    m.set("build_compiler", __VERSION__);
    m.set("subcommand", subcommand);
    for (const auto& key : doc.keys()) {
        if (key == "threads" || key == "out") continue;
        m.set(key, doc.get(key));
    }
    m.write_file((dir / "manifest.txt").string());
}

fs::path out_dir(const Flags& f, const KeyValueDoc& doc) {
    const fs::path dir = f.out ? *f.out : doc.get_or("out", ".");
    fs::create_directories(dir);
    return dir;
}

int threads_of(const Flags& f, const KeyValueDoc& doc) {
    return f.threads ? *f.threads : static_cast<int>(doc.get_int_or("threads", 1));
}

struct PathDiag {
    std::int64_t path = 0;
    double min_value = 0.0, max_value = 0.0;
    double r_minus = std::numeric_limits<double>::quiet_NaN();
    double r_plus = std::numeric_limits<double>::quiet_NaN();
    double window_min = 0.0;
    double event = 0.0;
    double wsup = 0.0;
    double holder = std::numeric_limits<double>::quiet_NaN();
    double boundary_u = 0.0, boundary_sigma = 0.0;
    double qv = 0.0;
    double weak_res = std::numeric_limits<double>::quiet_NaN();
    double boundary_contact = 0.0;
};

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[hi] * w;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const Flags& flags) {
    const auto doc = load_config(flags);
    const auto dir = out_dir(flags, doc);
    const auto grid = grid_from(doc);
    const auto spec = spec_from(doc);
    const auto u0 = u0_from(doc, grid);
    const auto snaps = snapshots_from(doc, grid);

    const std::uint64_t seed = static_cast<std::uint64_t>(doc.get_int_or("seed", 12345));
    const std::int64_t n_paths = doc.get_int_or("paths", 1);
    const bool record_noise = doc.get_int_or("record_noise", 0) != 0;
    const bool dense = doc.get_int_or("dense", 1) != 0;
    const bool write_all = doc.get_int_or("write_all_snapshots", 0) != 0;

    const double theta_rel = doc.get_double_or("theta_rel", 1e-10);
    const double theta_pos = doc.get_double_or("theta_pos", 1e-12);
    const double a_weight = doc.get_double_or("weight_a", 1.0);
    const double holder_gamma = doc.get_double_or("holder_gamma", 0.2);
    const double win_t0 = doc.get_double_or("window_t0", 0.5 * grid.T);
    const double win_t1 = doc.get_double_or("window_t1", grid.T);
    const double win_half = doc.get_double_or("window_x", std::min(2.0, grid.L - grid.dx()));
    const double boundary_R = doc.get_double_or("boundary_R", 6.0);
    const double qv_beta = doc.get_double_or("qv_beta", 0.5);

    const double u0_max = u0.max();

    auto job = [&](std::int64_t p) {
        SimulateOptions opts;
        opts.record_noise = record_noise;
        opts.dense = dense;
        const auto traj = simulate(u0, spec, grid, NoisePlan(seed, p), snaps, opts);

        PathDiag d;
        d.path = p;
        d.min_value = std::numeric_limits<double>::infinity();
        d.max_value = -std::numeric_limits<double>::infinity();
        for (const auto& f : traj.snapshots) {
            d.min_value = std::min(d.min_value, f.min());
            d.max_value = std::max(d.max_value, f.max());
        }
        if (const auto r = support_radius(grid, traj.final(), theta_rel * u0_max)) {
            d.r_minus = r->r_minus;
            d.r_plus = r->r_plus;
        }
        const auto wm =
            positivity_window_min(traj, win_t0, win_t1, -win_half, win_half, theta_pos);
        d.window_min = wm.min_value;
        d.event = wm.event ? 1.0 : 0.0;
        d.wsup = weighted_sup(grid, traj.final(), a_weight);
        if (traj.snapshots.size() >= 2)
            d.holder = holder_norm(traj, a_weight, holder_gamma, 20000, seed ^ 0x5eedULL);
        const auto bi = boundary_time_integral(traj, spec, boundary_R);
        d.boundary_u = bi.u_integral;
        d.boundary_sigma = bi.sigma_integral;
        d.qv = quadratic_variation_outside(traj, spec, boundary_R);
        if (record_noise && dense) {
            std::vector<double> phi(static_cast<std::size_t>(grid.n_nodes()), 0.0);
            for (int i = 1; i < grid.n_x; ++i) {
                const double x = grid.node(i);
                phi[static_cast<std::size_t>(i)] = std::exp(-0.25 * x * x);
            }
            phi.back() = 0.0;
            d.weak_res = weak_residual(traj, spec, phi);
        }
        d.boundary_contact = traj.boundary_contact ? 1.0 : 0.0;

        if (p == 0 || write_all) {
            Trajectory to_write = traj;
            if (dense) {
                // keep only the requested snapshot times in the CSV
                Trajectory thin;
                thin.grid = traj.grid;
                for (const auto& f : traj.snapshots) {
                    bool keep = f.t == 0.0;
                    for (double t : snaps)
                        if (std::abs(f.t - t) < 1e-9 * std::max(1.0, t)) keep = true;
                    if (keep) thin.snapshots.push_back(f);
                }
                to_write = thin;
            }
            write_snapshot_csv((dir / ("snapshots_p" + std::to_string(p) + ".csv")).string(),
                               to_write);
            if (record_noise) {
                NoiseRecordHeader h;
                h.seed = seed;
                h.path_index = p;
                h.n_steps = static_cast<std::uint64_t>(traj.recorded_steps);
                h.n_cells = static_cast<std::uint64_t>(grid.n_x - 1);
                h.L = grid.L;
                h.dx = grid.dx();
                h.dt = grid.dt;
                h.T = grid.T;
                write_noise_record((dir / ("noise_p" + std::to_string(p) + ".bin")).string(), h,
                                   traj.noise_record);
            }
        }
        return d;
    };

    const auto diags = run_ensemble<PathDiag>(n_paths, threads_of(flags, doc), job);

    CsvWriter csv((dir / "diagnostics.csv").string());
    csv.header({"path", "min_value", "max_value", "r_minus", "r_plus", "window_min", "event",
                "weighted_sup", "holder_norm", "boundary_u_integral", "boundary_sigma_integral",
                "qv_outside", "weak_residual", "boundary_contact"});
    auto emit = [&](const std::string& label, auto get) {
        std::vector<double> cols[13];
        for (const auto& d : diags) {
            const double vals[13] = {d.min_value, d.max_value, d.r_minus, d.r_plus, d.window_min,
                                     d.event, d.wsup, d.holder, d.boundary_u, d.boundary_sigma,
                                     d.qv, d.weak_res, d.boundary_contact};
            for (int c = 0; c < 13; ++c)
                if (!std::isnan(vals[c])) cols[c].push_back(vals[c]);
        }
        std::vector<std::string> row{label};
        for (int c = 0; c < 13; ++c) row.push_back(fmt_double(get(cols[c])));
        csv.row_strings(row);
    };
    for (const auto& d : diags) {
        csv.row()
            .add(d.path)
            .add(d.min_value)
            .add(d.max_value)
            .add(d.r_minus)
            .add(d.r_plus)
            .add(d.window_min)
            .add(d.event)
            .add(d.wsup)
            .add(d.holder)
            .add(d.boundary_u)
            .add(d.boundary_sigma)
            .add(d.qv)
            .add(d.weak_res)
            .add(d.boundary_contact);
    }
    emit("AGG_mean", [](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        int n = 0;
        for (double x : v)
            if (!std::isnan(x)) { s += x; ++n; }
        return n ? s / n : std::numeric_limits<double>::quiet_NaN();
    });
    emit("AGG_q25", [](const std::vector<double>& v) { return quantile(v, 0.25); });
    emit("AGG_median", [](const std::vector<double>& v) { return quantile(v, 0.5); });
    emit("AGG_q75", [](const std::vector<double>& v) { return quantile(v, 0.75); });

    // flat summary for scripting
    KeyValueDoc summary;
    summary.set_int("paths", n_paths);
    double freq = 0.0, mean_rp = 0.0, mean_bu = 0.0, worst_min = 0.0;
    int rp_count = 0;
    for (const auto& d : diags) {
        freq += d.event;
        if (!std::isnan(d.r_plus)) { mean_rp += d.r_plus; ++rp_count; }
        mean_bu += d.boundary_u;
        worst_min = std::min(worst_min, d.min_value);
    }
    summary.set_double("event_frequency", freq / static_cast<double>(n_paths));
    summary.set_double("mean_r_plus", rp_count ? mean_rp / rp_count
                                               : std::numeric_limits<double>::quiet_NaN());
    summary.set_double("mean_boundary_u_integral", mean_bu / static_cast<double>(n_paths));
    summary.set_double("worst_min_value", worst_min);
    summary.write_file((dir / "summary.txt").string());

    write_manifest(dir, "simulate", doc);
    return 0;
}

// ---------------------------------------------------------------------------
// deterministic
// ---------------------------------------------------------------------------

int cmd_deterministic(const Flags& flags) {
    const auto doc = load_config(flags);
    const auto dir = out_dir(flags, doc);
    const GridConfig grid = grid_from(doc, 1024, 1.0);
    const auto spec = spec_from(doc);
    const auto u0 = u0_from(doc, grid);
    const auto snaps = snapshots_from(doc, grid);

    const auto traj = solve_deterministic(u0, spec, grid, snaps);
    write_snapshot_csv((dir / "snapshots.csv").string(), traj);

    KeyValueDoc summary;
    const auto integrals = kalashnikov_integrals(spec);
    summary.set_double("csp_integral", integrals.csp_integral);
    summary.set_int("csp_divergent", integrals.csp_divergent ? 1 : 0);
    summary.set_double("positivity_integral", integrals.positivity_integral);
    summary.set_int("positivity_divergent", integrals.positivity_divergent ? 1 : 0);
    if (const auto r = support_radius(grid, traj.final(), 1e-14)) {
        summary.set_double("r_minus", r->r_minus);
        summary.set_double("r_plus", r->r_plus);
    } else {
        summary.set("r_minus", "none");
        summary.set("r_plus", "none");
    }
    double mass = 0.0;
    for (double v : traj.final().values) mass += v * grid.dx();
    summary.set_double("final_mass", mass);
    summary.set_double("final_max", traj.final().max());
    summary.write_file((dir / "summary.txt").string());

    write_manifest(dir, "deterministic", doc);
    return 0;
}

// ---------------------------------------------------------------------------
// conditions
// ---------------------------------------------------------------------------

int cmd_conditions(const Flags& flags) {
    const auto doc = load_config(flags);
    const auto dir = out_dir(flags, doc);
    const double alpha_pos = doc.get_double_or("alpha_pos", doc.get_double_or("alpha", 0.2));
    const double alpha_csp = doc.get_double_or("alpha_csp", 3.0);
    const std::int64_t k_max_bool = doc.get_int_or("k_max", 1000000);
    const std::int64_t k_max_sum = doc.get_int_or("k_max_sum", 10000);

    std::vector<std::pair<std::string, NonlinearitySpec>> specs;
    if (doc.has("beta_list")) {
        for (double b : parse_double_list(doc.get("beta_list"), "beta_list"))
            specs.emplace_back("logcorrected_beta=" + fmt_double(b),
                               NonlinearitySpec::log_corrected(b, doc.get_double_or("gamma2", 0.0)));
    } else {
        specs.emplace_back("spec", spec_from(doc));
    }

    CsvWriter csv((dir / "conditions.csv").string());
    csv.header({"label", "alpha_pos", "positivity_all", "positivity_first_failure",
                "positivity_eventually", "alpha_csp", "csp_all", "csp_first_failure",
                "csp_eventually", "kalashnikov_sum", "kalashnikov_convergent", "critical_sum",
                "critical_convergent"});
    for (const auto& [label, spec] : specs) {
        const auto pos = positivity_condition(spec, alpha_pos, k_max_bool);
        const auto csp = csp_condition(spec, alpha_csp, k_max_bool);
        const auto ksum = kalashnikov_sum(spec, k_max_sum);
        const auto crit = critical_sum(spec, k_max_sum);
        csv.row()
            .add(label)
            .add(alpha_pos)
            .add(static_cast<std::int64_t>(pos.all_hold() ? 1 : 0))
            .add(pos.first_failure ? std::to_string(*pos.first_failure) : std::string("none"))
            .add(static_cast<std::int64_t>(pos.holds_eventually() ? 1 : 0))
            .add(alpha_csp)
            .add(static_cast<std::int64_t>(csp.all_hold() ? 1 : 0))
            .add(csp.first_failure ? std::to_string(*csp.first_failure) : std::string("none"))
            .add(static_cast<std::int64_t>(csp.holds_eventually() ? 1 : 0))
            .add(ksum.total())
            .add(static_cast<std::int64_t>(ksum.convergent ? 1 : 0))
            .add(crit.total())
            .add(static_cast<std::int64_t>(crit.convergent ? 1 : 0));
    }
    write_manifest(dir, "conditions", doc);
    return 0;
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

int cmd_converge(const Flags& flags) {
    const auto doc = load_config(flags);
    const auto dir = out_dir(flags, doc);
    const GridConfig grid = grid_from(doc, 256, 0.25);
    const auto spec = spec_from(doc);
    const auto u0 = u0_from(doc, grid);
    const auto snaps = snapshots_from(doc, grid);

    const auto m_list = doc.has("m_list") ? parse_int_list(doc.get("m_list"), "m_list")
                                          : std::vector<int>{2, 4, 8, 16, 32};
    const int reference_m = static_cast<int>(doc.get_int_or("reference_m", 64));
    const std::uint64_t seed = static_cast<std::uint64_t>(doc.get_int_or("seed", 12345));
    const std::int64_t n_paths = doc.get_int_or("paths", 8);

    const auto study = convergence_study(u0, spec, grid, seed, m_list, reference_m, snaps, n_paths);

    CsvWriter csv((dir / "converge.csv").string());
    csv.header({"m", "reference_m", "sup_distance", "ensemble_l2"});
    for (const auto& row : study.rows)
        csv.row().add(row.m).add(reference_m).add(row.sup_distance).add(row.ensemble_l2);
    write_manifest(dir, "converge", doc);
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

int cmd_compare(const Flags& flags) {
    const auto doc = load_config(flags);
    const auto dir = out_dir(flags, doc);
    const GridConfig grid = grid_from(doc, 512, 0.25);
    const auto spec = spec_from(doc);
    const auto hi0 = u0_from(doc, grid);
    const auto lo0 = indicator_field(grid, doc.get_double_or("lo_a", -0.5),
                                     doc.get_double_or("lo_b", 0.5),
                                     doc.get_double_or("lo_height", 0.5));
    const auto snaps = snapshots_from(doc, grid);
    const std::uint64_t seed = static_cast<std::uint64_t>(doc.get_int_or("seed", 12345));
    const std::int64_t n_paths = doc.get_int_or("paths", 32);

    struct Row {
        std::int64_t path;
        double violated_fraction, worst;
    };
    auto job = [&](std::int64_t p) {
        SimulateOptions opts;
        opts.dense = true;
        const auto [hi, lo] = coupled_simulate(hi0, lo0, spec, grid, NoisePlan(seed, p), snaps, opts);
        const auto cs = comparison_stats(hi, lo);
        return Row{p, cs.violated_fraction, cs.worst_violation};
    };
    const auto rows = run_ensemble<Row>(n_paths, threads_of(flags, doc), job);

    CsvWriter csv((dir / "compare.csv").string());
    csv.header({"path", "violated_fraction", "worst_violation"});
    double mean_vf = 0.0, worst = 0.0;
    for (const auto& r : rows) {
        csv.row().add(r.path).add(r.violated_fraction).add(r.worst);
        mean_vf += r.violated_fraction;
        worst = std::min(worst, r.worst);
    }
    KeyValueDoc summary;
    summary.set_double("mean_violated_fraction", mean_vf / static_cast<double>(n_paths));
    summary.set_double("worst_violation", worst);
    summary.set_double("u0_max", hi0.max());
    summary.write_file((dir / "summary.txt").string());
    write_manifest(dir, "compare", doc);
    return 0;
}

// ---------------------------------------------------------------------------
// propagation
// ---------------------------------------------------------------------------

int cmd_propagation(const Flags& flags) {
    const auto doc = load_config(flags);
    const auto dir = out_dir(flags, doc);
    const double T = doc.get_double_or("T", 1.0);
    const double M = doc.get_double_or("M", 1.0);
    const double eta = doc.get_double_or("eta_level", 0.2);
    const double r = doc.get_double_or("r", 0.5);
    const int m_min = static_cast<int>(doc.get_int_or("m_min", 10));
    const int m_max = static_cast<int>(doc.get_int_or("m_max", 1000));
    const int m_step = static_cast<int>(doc.get_int_or("m_step", 1));
    if (m_min < 1 || m_max < m_min || m_step < 1)
        throw ConfigError("propagation: need 1 <= m_min <= m_max and m_step >= 1");

    CsvWriter csv((dir / "propagation.csv").string());
    csv.header({"m", "inf_value", "arg_s", "arg_x", "satisfied"});
    int m_star = -1;
    for (int m = m_min; m <= m_max; m += m_step) {
        const auto rep = propagation_lower_bound(T, M, eta, r, m);
        csv.row()
            .add(m)
            .add(rep.inf_value)
            .add(rep.arg_s)
            .add(rep.arg_x)
            .add(static_cast<std::int64_t>(rep.satisfied ? 1 : 0));
        if (rep.satisfied && m_star < 0) m_star = m;
        if (!rep.satisfied) m_star = -1;
    }
    KeyValueDoc summary;
    if (m_star >= 0)
        summary.set_int("m_star", m_star);
    else
        summary.set("m_star", "none");
    summary.write_file((dir / "summary.txt").string());
    write_manifest(dir, "propagation", doc);
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const Flags& flags) {
    const auto doc = load_config(flags);
    const auto dir = out_dir(flags, doc);
    const auto grid = grid_from(doc);
    const auto u0 = u0_from(doc, grid);
    const auto snaps = snapshots_from(doc, grid);
    const std::uint64_t seed = static_cast<std::uint64_t>(doc.get_int_or("seed", 12345));
    const std::int64_t n_paths = doc.get_int_or("paths", 16);
    const double theta_rel = doc.get_double_or("theta_rel", 1e-10);
    const double theta_pos = doc.get_double_or("theta_pos", 1e-12);
    const double boundary_R = doc.get_double_or("boundary_R", 6.0);
    const double win_t0 = doc.get_double_or("window_t0", 0.5 * grid.T);
    const double win_t1 = doc.get_double_or("window_t1", grid.T);
    const double win_half = doc.get_double_or("window_x", std::min(2.0, grid.L - grid.dx()));
    const auto betas = doc.has("beta_list")
                           ? parse_double_list(doc.get("beta_list"), "beta_list")
                           : std::vector<double>{0.1, 0.5, 1.0, 2.0, 3.0};
    const double u0_max = u0.max();

    CsvWriter csv((dir / "sweep.csv").string());
    csv.header({"beta", "paths", "event_frequency", "mean_r_plus", "mean_boundary_u_integral",
                "mean_window_min"});
    for (double beta : betas) {
        const auto spec = NonlinearitySpec::log_corrected(beta, doc.get_double_or("gamma2", 0.0));
        struct Row {
            double event, r_plus, bu, wmin;
        };
        auto job = [&](std::int64_t p) {
            SimulateOptions opts;
            opts.dense = true;
            const auto traj = simulate(u0, spec, grid, NoisePlan(seed, p), snaps, opts);
            Row row{};
            const auto wm =
                positivity_window_min(traj, win_t0, win_t1, -win_half, win_half, theta_pos);
            row.event = wm.event ? 1.0 : 0.0;
            row.wmin = wm.min_value;
            const auto r = support_radius(grid, traj.final(), theta_rel * u0_max);
            row.r_plus = r ? r->r_plus : 0.0;
            row.bu = boundary_time_integral(traj, spec, boundary_R).u_integral;
            return row;
        };
        const auto rows = run_ensemble<Row>(n_paths, threads_of(flags, doc), job);
        double freq = 0.0, rp = 0.0, bu = 0.0, wmin = 0.0;
        for (const auto& r : rows) {
            freq += r.event;
            rp += r.r_plus;
            bu += r.bu;
            wmin += r.wmin;
        }
        const double n = static_cast<double>(n_paths);
        csv.row().add(beta).add(n_paths).add(freq / n).add(rp / n).add(bu / n).add(wmin / n);
    }
    write_manifest(dir, "sweep", doc);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-D stochastic heat equation experiments"};
    app.require_subcommand(1);

    Flags f;
    app.add_option("--config", f.config, "key=value config file");
    app.add_option("--seed", f.seed, "RNG seed");
    app.add_option("--paths", f.paths, "ensemble size");
    app.add_option("--threads", f.threads, "worker threads (never changes outputs)");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--family", f.family, "nonlinearity family");
    app.add_option("--gamma", f.gamma, "power-law exponent");
    app.add_option("--beta", f.beta, "log-corrected exponent");
    app.add_option("--gamma2", f.gamma2, "log-log exponent");
    app.add_option("--c", f.c, "linear coefficient");
    app.add_option("--table", f.table, "tabulated points u:sigma,...");
    app.add_option("--m", f.m, "truncation level");
    app.add_option("--eta", f.eta, "rescale base");
    app.add_option("--k", f.k, "rescale level");
    app.add_option("--alpha", f.alpha, "condition exponent");
    app.add_option("--k-max", f.k_max, "condition horizon");
    app.add_option("--grid-nx", f.grid_nx, "cell count");
    app.add_option("--grid-L", f.grid_L, "half-domain");
    app.add_option("--dt", f.dt, "time step (0 = auto)");
    app.add_option("--T", f.T, "horizon");
    app.add_option("--snapshots", f.snapshots, "comma-separated snapshot times");

    auto* s_sim = app.add_subcommand("simulate", "stochastic runs + diagnostics");
    auto* s_det = app.add_subcommand("deterministic", "absorption equation + integral criteria");
    auto* s_cond = app.add_subcommand("conditions", "nonlinearity condition evaluators");
    auto* s_conv = app.add_subcommand("converge", "truncation convergence study");
    auto* s_comp = app.add_subcommand("compare", "coupled comparison experiment");
    auto* s_prop = app.add_subcommand("propagation", "heat-kernel propagation bound scan");
    auto* s_sweep = app.add_subcommand("sweep", "beta-grid phase diagram");
    for (auto* sub : {s_sim, s_det, s_cond, s_conv, s_comp, s_prop, s_sweep})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
        if (s_sim->parsed()) return cmd_simulate(f);
        if (s_det->parsed()) return cmd_deterministic(f);
        if (s_cond->parsed()) return cmd_conditions(f);
        if (s_conv->parsed()) return cmd_converge(f);
        if (s_comp->parsed()) return cmd_compare(f);
        if (s_prop->parsed()) return cmd_propagation(f);
        if (s_sweep->parsed()) return cmd_sweep(f);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const BlowupError& e) {
        std::cerr << "blow-up: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
