#include <cstdio>

#include "ganlab/simplex.hpp"

// Exact best-response play on a two-point support. The generator keeps
// jumping to whichever point the discriminator currently favors, so the
// trajectory oscillates with period 2 instead of settling at the optimum.

int main() {
  using namespace ganlab;

  const auto p_r = DiscreteDensity::from_probs({0.5, 0.5});
  const auto p_g0 = DiscreteDensity::from_probs({0.9, 0.1});
  const DynamicsTrajectory traj = run_dynamics(p_r, p_g0, 6);

  std::printf("%-5s %-18s %-12s %-10s\n", "step", "p_g", "value", "collapse");
  for (const auto& s : traj.steps) {
    std::printf("%-5zu [%.3f, %.3f]     %-12.6f %-10.6f\n", s.step, s.p_g[0],
                s.p_g[1], s.value, s.collapse);
  }

  const auto nash = gan_value(p_r, p_r);
  std::printf("\nvalue at p_g = p_r: %.6f (-log 4 = %.6f)\n", nash.direct,
              -std::log(4.0));
  return 0;
}
