// Long-run second moment of the cubic field against the Gaussian value of its
// linear part, both started far from equilibrium.
#include <cstdio>

#include "fhn/fhn.hpp"

int main() {
  fhn::ModelParams p;
  p.n_modes = 16;
  p.n_grid = 32;
  fhn::Model model(p);
  auto noise = fhn::NoiseSpec::power_law(model.n_modes());

  fhn::TrajectoryConfig cfg;
  cfg.T = 60.0;
  cfg.dt = 0.01;
  cfg.record_every = 500;
  cfg.master_seed = 7;
  cfg.x0 = fhn::with_norm_H(fhn::cosine_state(model, 1, 1.0, 0.5), 3.0, model.gamma());

  std::printf("%8s %14s %14s\n", "t", "E|X|^2 cubic", "E|X|^2 linear");
  auto cubic = fhn::estimate_moments(cfg, model, noise, 64);
  cfg.linear = true;
  auto linear = fhn::estimate_moments(cfg, model, noise, 64);
  for (std::size_t i = 0; i < cubic.times.size(); ++i) {
    std::printf("%8.1f %14.6g %14.6g\n", cubic.times[i], cubic.mean[0][i], linear.mean[0][i]);
  }
  std::printf("linear stationary value %.6g\n", fhn::linear_stationary_second_moment(model, noise));
}
