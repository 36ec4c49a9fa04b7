// Minimal tour: simulate the stochastic heat equation with a square-root
// coefficient, then measure where the solution lives.

#include <cstdio>

#include "she/she.hpp"

int main() {
    using namespace she;

    GridConfig grid(8.0, 512, 0.0, 0.5);
    const auto u0 = indicator_field(grid, -1.0, 1.0);
    const auto sigma = NonlinearitySpec::power_law(0.5);

    const auto traj = simulate(u0, sigma, grid, NoisePlan(/*seed=*/7, /*path=*/0), {0.25, 0.5});

    std::printf("final max  = %.6f\n", traj.final().max());
    if (const auto r = support_radius(grid, traj.final(), 1e-10 * u0.max()))
        std::printf("support    = [%.4f, %.4f]\n", r->r_minus, r->r_plus);

    const auto wm = positivity_window_min(traj, 0.25, 0.5, -2.0, 2.0, 1e-12);
    std::printf("window min = %.3e (positive: %s)\n", wm.min_value, wm.event ? "yes" : "no");

    // deterministic companion: does the absorption equation die out?
    const auto integrals = kalashnikov_integrals(sigma);
    std::printf("csp integral = %.6f (%s)\n", integrals.csp_integral,
                integrals.csp_divergent ? "divergent" : "finite");
    return 0;
}
