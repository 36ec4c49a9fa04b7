#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "she/diagnostics.hpp"
#include "she/heat_kernel.hpp"
#include "she/pde.hpp"

using namespace she;

namespace {
GridConfig det_grid(int n_x = 1024, double T = 1.0) {
    GridConfig g;
    g.L = 8.0;
    g.n_x = n_x;
    g.T = T;
    g.finalize();
    return g;
}
} // namespace

TEST_CASE("linear absorption matches the closed form e^-t G*u0") {
    const auto g = det_grid();
    const auto u0 = indicator_field(g, -1.0, 1.0, 1.0, EdgeSampling::endpoint_corrected);
    const auto traj = solve_deterministic(u0, NonlinearitySpec::linear(1.0), g, {1.0});
    double worst_rel = 0.0;
    for (int i = 0; i <= g.n_x; ++i) {
        const double x = g.node(i);
        if (std::abs(x) > 5.0) continue;
        const double exact = std::exp(-1.0) * convolve_indicator(1.0, 1.0, x);
        const double got = traj.final().values[static_cast<std::size_t>(i)];
        worst_rel = std::max(worst_rel, std::abs(got - exact) / exact);
        CHECK(got > 0.0);
    }
    CHECK(worst_rel < 1e-4);
}

TEST_CASE("sigma = 0 gives pure heat flow with conserved mass") {
    const auto g = det_grid(512, 0.5);
    const auto u0 = indicator_field(g, -1.0, 1.0);
    const auto zero = NonlinearitySpec::tabulated({{0.5, 0.0}, {1.0, 0.0}});
    const auto traj = solve_deterministic(u0, zero, g, {0.5});
    double m0 = 0.0, m1 = 0.0;
    for (double v : traj.initial().values) m0 += v * g.dx();
    for (double v : traj.final().values) m1 += v * g.dx();
    CHECK(m1 == Catch::Approx(m0).epsilon(1e-12));
}

TEST_CASE("square-root absorption dies out with a compact front of exact zeros") {
    const auto g = det_grid();
    const auto u0 = indicator_field(g, -1.0, 1.0);
    const auto traj = solve_deterministic(u0, NonlinearitySpec::power_law(0.5), g, {1.0});
    // values beyond the front are identically zero (the absorbed floor),
    // and every node is nonnegative
    int last_nonzero = -1;
    for (int i = 0; i <= g.n_x; ++i) {
        const double v = traj.final().values[static_cast<std::size_t>(i)];
        CHECK(v >= 0.0);
        if (v != 0.0) last_nonzero = i;
    }
    REQUIRE(last_nonzero >= 0);
    CHECK(g.node(last_nonzero) < 3.0);
    // true zeros, not small values, outside the support
    for (int i = last_nonzero + 1; i <= g.n_x; ++i)
        CHECK(traj.final().values[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("deterministic comparison is exact for ordered data") {
    GridConfig g;
    g.L = 8.0;
    g.n_x = 256;
    g.T = 0.25;
    g.dt = (2.0 * 8.0 / 256) * (2.0 * 8.0 / 256) / 8.0;  // deep absorption needs a smaller step
    g.finalize();
    const auto hi0 = indicator_field(g, -1.0, 1.0);
    const auto lo0 = indicator_field(g, -0.5, 0.5, 0.6);
    for (const auto& spec :
         {NonlinearitySpec::power_law(0.5), NonlinearitySpec::linear(1.0),
          NonlinearitySpec::log_corrected(3.0, 0.0)}) {
        SimulateOptions opts;
        opts.dense = true;
        const auto hi = solve_deterministic(hi0, spec, g, {0.25}, opts);
        const auto lo = solve_deterministic(lo0, spec, g, {0.25}, opts);
        for (std::size_t s = 0; s < hi.snapshots.size(); ++s)
            for (std::size_t i = 0; i < hi.snapshots[s].values.size(); ++i)
                CHECK(hi.snapshots[s].values[i] >= lo.snapshots[s].values[i]);
    }
}

TEST_CASE("overshoot gate rejects an absurd time step with a suggestion") {
    GridConfig g;
    g.L = 8.0;
    g.n_x = 64;   // dx = 0.25, dx^2/2 = 0.03125
    g.dt = 0.03;
    g.T = 0.3;
    g.finalize();
    const auto u0 = indicator_field(g, -1.0, 1.0);
    // huge linear rate: dt * sigma(u)/u = 0.03 * 300 >> 1
    CHECK_THROWS_AS(solve_deterministic(u0, NonlinearitySpec::linear(300.0), g, {0.3}),
                    ConfigError);
}

TEST_CASE("kalashnikov integrals closed forms") {
    // power law 1/2: csp integral = int u^-3/4 = 4, positivity = int u^-1/2 = 2
    const auto rep = kalashnikov_integrals(NonlinearitySpec::power_law(0.5));
    CHECK_FALSE(rep.csp_divergent);
    CHECK_FALSE(rep.positivity_divergent);
    CHECK(rep.csp_integral == Catch::Approx(4.0).margin(1e-8));
    CHECK(rep.positivity_integral == Catch::Approx(2.0).margin(1e-8));

    // linear: both integrals diverge logarithmically
    const auto lin = kalashnikov_integrals(NonlinearitySpec::linear(1.0));
    CHECK(lin.csp_divergent);
    CHECK(lin.positivity_divergent);

    // gamma = 1 boundary case behaves like linear
    const auto pl1 = kalashnikov_integrals(NonlinearitySpec::power_law(1.0));
    CHECK(pl1.csp_divergent);
    CHECK(pl1.positivity_divergent);

    // gamma = 3/4: csp = int u^-7/8 = 8, positivity = int u^-3/4 = 4
    const auto pl34 = kalashnikov_integrals(NonlinearitySpec::power_law(0.75));
    CHECK(pl34.csp_integral == Catch::Approx(8.0).margin(1e-8));
    CHECK(pl34.positivity_integral == Catch::Approx(4.0).margin(1e-8));

    // zero sigma is rejected
    CHECK_THROWS_AS(kalashnikov_integrals(NonlinearitySpec::tabulated({{0.5, 0.0}, {1.0, 0.0}})),
                    ConfigError);
}

TEST_CASE("support radius consistent with the finite csp integral verdict") {
    // finite csp integral: the solved front must be stable under refinement
    const auto coarse_g = det_grid(1024);
    const auto fine_g = det_grid(2048);
    const auto spec = NonlinearitySpec::power_law(0.5);
    const auto coarse =
        solve_deterministic(indicator_field(coarse_g, -1.0, 1.0), spec, coarse_g, {1.0});
    const auto fine = solve_deterministic(indicator_field(fine_g, -1.0, 1.0), spec, fine_g, {1.0});
    const auto rc = support_radius(coarse_g, coarse.final(), 1e-14);
    const auto rf = support_radius(fine_g, fine.final(), 1e-14);
    REQUIRE(rc.has_value());
    REQUIRE(rf.has_value());
    CHECK(std::abs(rc->r_plus - rf->r_plus) < 2.0 * coarse_g.dx());
    CHECK(std::abs(rc->r_minus - rf->r_minus) < 2.0 * coarse_g.dx());
}
