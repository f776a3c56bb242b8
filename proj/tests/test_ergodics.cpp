#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fhn/ergodics.hpp"
#include "fhn/model.hpp"
#include "fhn/noise.hpp"
#include "fhn/solver.hpp"
#include "fhn/stats.hpp"

namespace {

using fhn::Model;
using fhn::ModelParams;
using fhn::NoiseSpec;
using fhn::StateH;
using fhn::TrajectoryConfig;

ModelParams small_params(int n = 8) {
  ModelParams p;
  p.n_modes = n;
  p.n_grid = 2 * n;
  return p;
}

TEST(Stats, MeanSeAndOls) {
  auto ms = fhn::mean_se({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_NEAR(ms.sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(ms.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  auto fit = fhn::ols({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.r2, 1.0, 1e-14);
}

TEST(Stats, KolmogorovTail) {
  // Q_KS(1.358) is the 5% point, Q_KS(1.628) the 1% point.
  EXPECT_NEAR(fhn::kolmogorov_tail(1.358), 0.05, 5e-4);
  EXPECT_NEAR(fhn::kolmogorov_tail(1.628), 0.01, 2e-4);
  EXPECT_NEAR(fhn::kolmogorov_tail(0.0), 1.0, 1e-12);
}

TEST(Stats, KsTwoSample) {
  std::vector<double> a, b, c;
  for (int i = 0; i < 200; ++i) {
    a.push_back(i);
    b.push_back(i + 0.5);
    c.push_back(100 + i);
  }
  EXPECT_FALSE(fhn::ks_two_sample(a, b).reject);
  EXPECT_TRUE(fhn::ks_two_sample(a, c).reject);
  EXPECT_NEAR(fhn::ks_two_sample(a, c).statistic, 0.5, 1e-12);
}

TEST(Stats, HistogramMassSumsToOne) {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(std::sin(i * 0.37));
  auto h = fhn::histogram_fd(v);
  EXPECT_NEAR(std::accumulate(h.mass.begin(), h.mass.end(), 0.0), 1.0, 1e-12);
  auto one = fhn::histogram_fd(std::vector<double>(50, 2.0));
  ASSERT_EQ(one.mass.size(), 1u);
  EXPECT_EQ(one.mass[0], 1.0);
}

TEST(LinearOracle, LyapunovResidualAllModes) {
  Model model(ModelParams{});
  NoiseSpec noise = NoiseSpec::power_law(model.n_modes());
  auto cov = fhn::linear_invariant_covariance(model, noise);
  EXPECT_NEAR(cov[0](0, 0), 0.022078, 5e-7);
  EXPECT_NEAR(cov[0](0, 1), 0.0038961, 5e-8);
  EXPECT_NEAR(cov[0](1, 1), 0.0069481, 5e-8);
  for (int k = 0; k < model.n_modes(); ++k) {
    auto ku = static_cast<std::size_t>(k);
    EXPECT_LE(fhn::lyapunov_residual(fhn::shifted_mode_matrix(k, model), cov[ku], fhn::mode_noise(noise, k)), 1e-12);
  }
  auto zero = fhn::linear_invariant_covariance(model, NoiseSpec::power_law(model.n_modes(), 0.0));
  for (const auto& s : zero) EXPECT_EQ(s.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Moments, ZeroNoiseZeroStart) {
  Model model(small_params());
  TrajectoryConfig c;
  c.T = 2.0;
  c.dt = 0.01;
  c.record_every = 10;
  c.x0 = model.zero_state();
  auto r = fhn::estimate_moments(c, model, NoiseSpec::power_law(8, 0.0), 2, 1);
  for (int m = 0; m < 2; ++m)
    for (double v : r.mean[m]) EXPECT_EQ(v, 0.0);
}

TEST(Moments, LinearLongRunMatchesGaussian) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c;
  c.T = 120.0;
  c.dt = 0.05;
  c.record_every = 400;
  c.linear = true;
  c.x0 = model.zero_state();
  auto r = fhn::estimate_moments(c, model, noise, 256, 1);
  double target = fhn::linear_stationary_second_moment(model, noise);
  EXPECT_NEAR(r.mean[0].back(), target, 3 * r.se[0].back());
  for (std::size_t i = 0; i < r.times.size(); ++i) EXPECT_GE(r.mean[1][i], r.mean[0][i] * r.mean[0][i]);
}

TEST(Moments, InitialTransientDecaysAtLeastAtPredictedRate) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c;
  c.T = 20.0;
  c.dt = 0.01;
  c.record_every = 50;
  c.x0 = fhn::with_norm_H(fhn::cosine_state(model, 0, 0.0, 1.0), 10.0, model.gamma());
  auto r = fhn::estimate_moments(c, model, noise, 16, 1);
  // Fit on the window where the initial-condition term dominates the noise floor.
  std::vector<double> t, y;
  double floor = fhn::linear_stationary_second_moment(model, noise);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (r.mean[0][i] > 100 * floor) {
      t.push_back(r.times[i]);
      y.push_back(std::log(r.mean[0][i]));
    }
  }
  ASSERT_GE(t.size(), 3u);
  EXPECT_GE(-fhn::ols(t, y).slope, r.omega1 * (1 - 0.3));
}

TEST(Semigroup, TrivialCases) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c;
  c.dt = 0.01;
  StateH x = fhn::cosine_state(model, 1, 0.3, 0.2);
  auto f = fhn::norm_H_functional(model);
  auto t0 = fhn::transition_semigroup(f, 0.0, x, c, model, noise, 8, 1);
  EXPECT_DOUBLE_EQ(t0.mean, std::sqrt(fhn::norm_H_sq(x, model)));
  EXPECT_EQ(t0.se, 0.0);
  auto one = fhn::transition_semigroup(fhn::constant_one(), 1.0, x, c, model, noise, 8, 1);
  EXPECT_EQ(one.mean, 1.0);
  EXPECT_EQ(one.se, 0.0);
}

TEST(Semigroup, ForgetsInitialCondition) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c;
  c.dt = 0.01;
  StateH x1 = model.zero_state();
  StateH x2 = fhn::with_norm_H(fhn::cosine_state(model, 0, 1.0, 1.0), 5.0, model.gamma());
  auto f = fhn::norm_H_functional(model);
  c.master_seed = 1;
  auto a = fhn::transition_semigroup(f, 20.0, x1, c, model, noise, 64, 1);
  c.master_seed = 2;
  auto b = fhn::transition_semigroup(f, 20.0, x2, c, model, noise, 64, 1);
  EXPECT_LE(std::abs(a.mean - b.mean), 3 * std::hypot(a.se, b.se));
}

TEST(InvariantMeasure, LinearProjectionIsGaussian) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c;
  c.dt = 0.05;
  c.linear = true;
  c.x0 = model.zero_state();
  fhn::InvariantMeasureConfig im;
  im.n_time_samples = 1000;
  im.n_ensemble = 400;
  StateH h = model.zero_state();
  h.u(0) = 1.0;
  h.w(1) = 0.5;
  auto em = fhn::estimate_invariant_measure(c, im, {fhn::projection_functional(h, model), fhn::norm_H_functional(model)},
                                            model, noise, 1);
  double sd = std::sqrt(fhn::linear_projection_variance(h, model, noise));
  std::vector<double> pooled = em.functionals[0].time_samples;
  pooled.insert(pooled.end(), em.functionals[0].ensemble_samples.begin(), em.functionals[0].ensemble_samples.end());
  EXPECT_FALSE(fhn::ks_normal(pooled, 0.0, sd).reject);
  for (const auto& fs : em.functionals) {
    EXPECT_FALSE(fs.ks.reject) << fs.name;
    EXPECT_NEAR(std::accumulate(fs.time_histogram.mass.begin(), fs.time_histogram.mass.end(), 0.0), 1.0, 1e-12);
  }
  auto m1 = fhn::invariant_moment_integral(1, em.time_states, model);
  double target = fhn::linear_stationary_second_moment(model, noise);
  EXPECT_NEAR(m1.norm_moment.mean, target, 3 * m1.norm_moment.se);
  auto m2 = fhn::invariant_moment_integral(2, em.time_states, model);
  EXPECT_GE(m2.norm_moment.mean, m1.norm_moment.mean * m1.norm_moment.mean);
}

TEST(InvariantMeasure, ZeroNoiseConcentrates) {
  Model model(small_params());
  TrajectoryConfig c;
  c.dt = 0.05;
  c.x0 = fhn::cosine_state(model, 0, 0.5, 0.0);
  fhn::InvariantMeasureConfig im;
  im.n_time_samples = 10;
  im.n_ensemble = 4;
  auto em = fhn::estimate_invariant_measure(c, im, {fhn::norm_H_functional(model)}, model,
                                            NoiseSpec::power_law(8, 0.0), 1);
  const auto& ts = em.functionals[0].time_samples;
  EXPECT_LT(*std::max_element(ts.begin(), ts.end()), 1e-10);
  auto m = fhn::invariant_moment_integral(1, em.time_states, model);
  EXPECT_LT(m.norm_moment.mean, 1e-20);
}

TEST(InvariantMeasure, BurnInGuard) {
  Model model(small_params());
  TrajectoryConfig c;
  c.x0 = model.zero_state();
  fhn::InvariantMeasureConfig im;
  im.burn_in = 10;
  EXPECT_THROW(fhn::estimate_invariant_measure(c, im, {}, model, NoiseSpec::power_law(8)), fhn::ConfigError);
}

}  // namespace
