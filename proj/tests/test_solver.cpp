#include <gtest/gtest.h>

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "fhn/model.hpp"
#include "fhn/noise.hpp"
#include "fhn/nonlinearity.hpp"
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

TrajectoryConfig config(const Model& model, double T, double dt) {
  TrajectoryConfig c;
  c.T = T;
  c.dt = dt;
  c.x0 = model.zero_state();
  c.record_every = 1;
  return c;
}

/// Sup over recorded times of |x - y|_H between two snapshot sequences.
double max_distance(const std::vector<StateH>& a, const std::vector<StateH>& b, const Model& model) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::sqrt(fhn::norm_H_sq(a[i] - b[i], model)));
  return m;
}

TEST(Validation, RejectsBadConfigs) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c = config(model, 1.0, 1e-2);
  c.dt = 0;
  EXPECT_THROW(fhn::integrate(c, model, noise), fhn::ConfigError);
  c = config(model, 1.0, 1e-2);
  c.record_every = 0;
  EXPECT_THROW(fhn::integrate(c, model, noise), fhn::ConfigError);
  c = config(model, 1.0, 1e-2);
  c.eps = -1;
  EXPECT_THROW(fhn::integrate(c, model, noise), fhn::ConfigError);
  c = config(model, 1.0, 1e-2);
  c.x0 = StateH::zero(3);
  EXPECT_THROW(fhn::integrate(c, model, noise), fhn::ConfigError);
  c = config(model, 1.0, 1e-2);
  c.noise_dt = 0.003;
  EXPECT_THROW(fhn::integrate(c, model, noise), fhn::ConfigError);
  c = config(model, 1.005, 1e-2);
  EXPECT_THROW(fhn::integrate(c, model, noise), fhn::ConfigError);
}

TEST(Trajectory, ZeroHorizonRecordsOnlyInitialState) {
  Model model(small_params());
  TrajectoryConfig c = config(model, 0.0, 1e-2);
  c.x0 = fhn::cosine_state(model, 1, 0.3, 0.1);
  auto rec = fhn::integrate(c, model, NoiseSpec::power_law(8));
  ASSERT_EQ(rec.times.size(), 1u);
  EXPECT_EQ(rec.times[0], 0.0);
  EXPECT_EQ(rec.terminal.u, c.x0.u);
}

TEST(Trajectory, RecordStrideAndMonotoneTimes) {
  Model model(small_params());
  TrajectoryConfig c = config(model, 1.0, 1e-2);
  c.record_every = 7;
  c.keep_snapshots = true;
  auto rec = fhn::integrate(c, model, NoiseSpec::power_law(8));
  ASSERT_EQ(rec.times.size(), 1u + 14u + 1u);
  for (std::size_t i = 1; i < rec.times.size(); ++i) EXPECT_GT(rec.times[i], rec.times[i - 1]);
  EXPECT_NEAR(rec.times.back(), 1.0, 1e-12);
  EXPECT_EQ(rec.snapshots.size(), rec.times.size());
  for (double h : rec.h_norm_sq) EXPECT_TRUE(std::isfinite(h));
}

TEST(Trajectory, EquilibriumPreserved) {
  Model model(small_params());
  TrajectoryConfig c = config(model, 5.0, 1e-2);
  auto rec = fhn::integrate(c, model, NoiseSpec::power_law(8, 0.0));
  for (double h : rec.h_norm_sq) EXPECT_EQ(h, 0.0);
}

TEST(Trajectory, DeterministicAndPathKeyed) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c = config(model, 1.0, 1e-2);
  c.master_seed = 99;
  c.x0 = fhn::cosine_state(model, 0, 0.4, 0.0);
  auto a = fhn::integrate(c, model, noise), b = fhn::integrate(c, model, noise);
  EXPECT_EQ(a.h_norm_sq, b.h_norm_sq);
  EXPECT_EQ(a.terminal.u, b.terminal.u);
  c.path_id = 1;
  auto d = fhn::integrate(c, model, noise);
  EXPECT_NE(a.h_norm_sq.back(), d.h_norm_sq.back());
}

TEST(Trajectory, EnsembleIndependentOfWorkers) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c = config(model, 0.5, 1e-2);
  c.x0 = fhn::cosine_state(model, 1, 0.5, 0.0);
  auto a = fhn::integrate_ensemble(c, model, noise, 6, 1);
  auto b = fhn::integrate_ensemble(c, model, noise, 6, 3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].h_norm_sq, b[i].h_norm_sq);
  c.path_id = 4;
  EXPECT_EQ(fhn::integrate(c, model, noise).h_norm_sq, a[4].h_norm_sq);
}

TEST(LinearDeterministic, MatchesOde) {
  Model model(small_params(4));
  NoiseSpec zero = NoiseSpec::power_law(4, 0.0);
  TrajectoryConfig c = config(model, 1.0, 0.1);
  c.linear = true;
  c.x0 = model.zero_state();
  for (int k = 0; k < 4; ++k) {
    c.x0.u(k) = 0.5 / (1 + k);
    c.x0.w(k) = -0.2;
  }
  auto rec = fhn::integrate(c, model, zero);
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  State y(8);
  for (int k = 0; k < 4; ++k) {
    y[static_cast<std::size_t>(2 * k)] = c.x0.u(k);
    y[static_cast<std::size_t>(2 * k + 1)] = c.x0.w(k);
  }
  auto rhs = [&](const State& s, State& ds, double) {
    for (int k = 0; k < 4; ++k) {
      fhn::Mat2 m = fhn::shifted_mode_matrix(k, model);
      auto i = static_cast<std::size_t>(2 * k);
      ds[i] = m(0, 0) * s[i] + m(0, 1) * s[i + 1];
      ds[i + 1] = m(1, 0) * s[i] + m(1, 1) * s[i + 1];
    }
  };
  ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-13, 1e-13), rhs, y, 0.0, 1.0, 1e-4);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(rec.terminal.u(k), y[static_cast<std::size_t>(2 * k)], 1e-10);
    EXPECT_NEAR(rec.terminal.w(k), y[static_cast<std::size_t>(2 * k + 1)], 1e-10);
  }
}

TEST(CubicDeterministic, FirstOrderSelfConvergence) {
  Model model(small_params());
  NoiseSpec zero = NoiseSpec::power_law(8, 0.0);
  auto run = [&](double dt) {
    TrajectoryConfig c = config(model, 1.0, dt);
    c.x0 = fhn::cosine_state(model, 1, 1.0, 0.2);
    c.x0.u(0) = 0.8;
    c.record_every = static_cast<int>(std::llround(0.125 / dt));
    c.keep_snapshots = true;
    return fhn::integrate(c, model, zero).snapshots;
  };
  auto ref = run(0.1 / 512);
  std::vector<double> ldt, lerr;
  for (double dt : {0.1 / 16, 0.1 / 32, 0.1 / 64}) {
    ldt.push_back(std::log(dt));
    lerr.push_back(std::log(max_distance(run(dt), ref, model)));
  }
  EXPECT_GE(fhn::ols(ldt, lerr).slope, 0.95);
}

TEST(CubicStochastic, StrongSelfConvergence) {
  // Shared noise across step sizes via a common noise lattice.
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8, 0.05);
  const double fine = 1.0 / 1024;
  auto run = [&](double dt, std::uint64_t path) {
    TrajectoryConfig c = config(model, 1.0, dt);
    c.x0 = fhn::constant_state(model, 0.8, 0.0);
    c.noise_dt = fine;
    c.path_id = path;
    c.master_seed = 5;
    c.record_every = static_cast<int>(std::llround(0.125 / dt));
    c.keep_snapshots = true;
    return fhn::integrate(c, model, noise).snapshots;
  };
  std::vector<double> ldt, lerr;
  for (double dt : {fine * 64, fine * 32, fine * 16}) {
    double s = 0;
    for (std::uint64_t p = 0; p < 8; ++p) {
      double d = max_distance(run(dt, p), run(fine * 2, p), model);
      s += d * d;
    }
    ldt.push_back(std::log(dt));
    lerr.push_back(0.5 * std::log(s / 8));
  }
  EXPECT_GE(fhn::ols(ldt, lerr).slope, 0.5);
}

TEST(StabilityCeiling, SubstepsLargeStates) {
  Model model(small_params());
  NoiseSpec zero = NoiseSpec::power_law(8, 0.0);
  TrajectoryConfig c = config(model, 0.5, 0.05);
  c.x0 = fhn::constant_state(model, 8.0, 0.0);
  auto rec = fhn::integrate(c, model, zero);
  EXPECT_GT(rec.substeps, 0);
  EXPECT_TRUE(rec.terminal.finite());
  // The cubic pulls the constant state back toward the origin.
  EXPECT_LT(rec.h_norm_sq.back(), rec.h_norm_sq.front());
}

TEST(StabilityCeiling, NonFiniteInitialStateRejected) {
  Model model(small_params());
  TrajectoryConfig c = config(model, 0.5, 0.05);
  c.x0 = model.zero_state();
  c.x0.u(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(fhn::integrate(c, model, NoiseSpec::power_law(8)), fhn::ConfigError);
}

TEST(Integrator, BlowUpReported) {
  Model model(small_params());
  NoiseSpec zero = NoiseSpec::power_law(8, 0.0);
  fhn::Integrator integ(model, zero, 1.0, 1.0, fhn::DriftKind::cubic);
  StateH x = fhn::constant_state(model, 1e200, 0.0);
  EXPECT_THROW(integ.step(x, 0, fhn::NoiseStream{}), fhn::BlowUpError);
}

TEST(NoiseLattice, StepCombinesQuantaExactly) {
  // A step of 4 quanta equals 4 steps of one quantum for the linear system.
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  fhn::Integrator coarse(model, noise, 0.04, 0.01, fhn::DriftKind::linear);
  fhn::Integrator fine(model, noise, 0.01, 0.01, fhn::DriftKind::linear);
  fhn::NoiseStream stream{11, 0};
  StateH x = fhn::cosine_state(model, 2, 0.3, -0.1);
  StateH a = coarse.step(x, 20, stream);
  StateH b = x;
  for (int i = 0; i < 4; ++i) b = fine.step(b, 20 + i, stream);
  EXPECT_LT((a.u - b.u).cwiseAbs().maxCoeff() + (a.w - b.w).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(NoiseLattice, AbsoluteTimeIndexing) {
  // A run started at -1 and one started at 0 from the first run's state at 0
  // coincide afterwards: both read the same lattice intervals.
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig a = config(model, 2.0, 0.01);
  a.start_time = -1.0;
  a.record_every = 100;
  a.keep_snapshots = true;
  a.x0 = fhn::cosine_state(model, 0, 0.4, 0.0);
  auto ra = fhn::integrate(a, model, noise);
  TrajectoryConfig b = config(model, 1.0, 0.01);
  b.x0 = ra.snapshots[1];
  auto rb = fhn::integrate(b, model, noise);
  EXPECT_LT((ra.terminal.u - rb.terminal.u).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EpsConvergence, EqualEpsGivesZeroDistanceAndOrderOne) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c = config(model, 1.0, 1e-3);
  c.x0 = fhn::constant_state(model, 1.2, 0.0);
  auto rep = fhn::eps_convergence_study({0.2, 0.1, 0.05, 0.025}, c, model, noise, 8, 1);
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_GE(rep.slope_fit.slope, 0.9);
  EXPECT_TRUE(rep.monotone);
  for (std::size_t i = 0; i < rep.f_eps_integral.size(); ++i) EXPECT_TRUE(std::isfinite(rep.f_eps_integral[i]));
}

TEST(Coupling, IdenticalStartsStayIdentical) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c = config(model, 1.0, 1e-2);
  StateH x = fhn::cosine_state(model, 1, 0.3, 0.0);
  auto rep = fhn::coupled_run(x, x, c, model, noise, 2, 1);
  for (const auto& d : rep.distance_sq)
    for (double v : d) EXPECT_EQ(v, 0.0);
}

TEST(Coupling, ContractionEnvelope) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c = config(model, 10.0, 1e-2);
  c.record_every = 10;
  StateH x = model.zero_state();
  StateH xb = x;
  xb.u(0) = 1.0 / std::sqrt(model.gamma());
  auto rep = fhn::coupled_run(x, xb, c, model, noise, 4, 1);
  EXPECT_NEAR(rep.initial_sq, 1.0, 1e-12);
  for (const auto& d : rep.distance_sq) EXPECT_LE(d.back(), std::exp(-1.0) * 1.05);
  EXPECT_LE(rep.max_envelope_ratio, 1.05);
  EXPECT_GE(rep.min_rate, 2 * rep.omega * 0.8);
}

TEST(Coupling, LinearDifferenceIgnoresNoise) {
  // With additive noise and a linear drift the difference of coupled paths solves
  // the noise-free equation, so it matches the zero-noise run up to rounding.
  Model model(small_params());
  TrajectoryConfig c = config(model, 5.0, 1e-2);
  c.record_every = 50;
  c.linear = true;
  StateH x = fhn::cosine_state(model, 0, 0.2, 0.0);
  StateH xb = fhn::cosine_state(model, 1, 0.7, 0.1);
  auto z = fhn::coupled_run(x, xb, c, model, NoiseSpec::power_law(8, 0.0), 1, 1);
  for (std::uint64_t seed : {1u, 2u}) {
    c.master_seed = seed;
    auto a = fhn::coupled_run(x, xb, c, model, NoiseSpec::power_law(8), 1, 1);
    for (std::size_t i = 0; i < a.times.size(); ++i) {
      EXPECT_NEAR(a.distance_sq[0][i], z.distance_sq[0][i], 1e-10 * z.distance_sq[0][i]);
    }
  }
}

TEST(Backward, LadderDecay) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c = config(model, 1.0, 1e-2);
  StateH x0 = fhn::cosine_state(model, 0, 2.0, 0.0);
  auto rep = fhn::backward_run({5, 10, 20, 40}, x0, c, model, noise, 8, 1);
  EXPECT_GT(rep.rate, 0.0);
  EXPECT_GE(rep.consecutive_fit.r2, 0.9);
  double trq = fhn::trace_Q(noise);
  const double omega = model.constants().omega;
  for (std::size_t i = 0; i < rep.ladder.size(); ++i) {
    double lam = rep.ladder[i];
    double env = (2 * trq * lam + fhn::norm_H_sq(x0, model)) * std::exp(-2 * omega * lam);
    EXPECT_LE(rep.second_moment[i], env + 1.0);
  }
}

TEST(Backward, EqualStartTimesCoincide) {
  Model model(small_params());
  NoiseSpec noise = NoiseSpec::power_law(8);
  TrajectoryConfig c = config(model, 1.0, 1e-2);
  auto rep = fhn::backward_run({5, 5}, model.zero_state(), c, model, noise, 2, 1);
  ASSERT_EQ(rep.pairs.size(), 1u);
  EXPECT_EQ(rep.pairs[0].distance, 0.0);
}

}  // namespace
