#ifndef FHN_ERGODICS_HPP
#define FHN_ERGODICS_HPP

// Long-time statistics: moment curves and envelopes, the Gaussian invariant law
// of the linear system, empirical invariant measures and the transition semigroup.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fhn/errors.hpp"
#include "fhn/mat2.hpp"
#include "fhn/model.hpp"
#include "fhn/noise.hpp"
#include "fhn/nonlinearity.hpp"
#include "fhn/parallel.hpp"
#include "fhn/solver.hpp"
#include "fhn/stats.hpp"

namespace fhn {

// ---------------------------------------------------------------------------
// Moments

struct MomentReport {
  std::vector<double> times;
  std::vector<double> mean[2];  // E|X(t)|_H^2 and E|X(t)|_H^4
  std::vector<double> se[2];
  double envelope_c[2] = {0, 0};  // smallest C with mean <= C (1 + e^{-m omega1 t} |x0|^{2m})
  double flatness[2] = {0, 0};    // |OLS slope| * (T/2) / mean over the last half of the horizon
  double omega1 = 0;
  double x0_norm_sq = 0;
  int n_paths = 0;
};

inline double moment_envelope(double t, int m, double omega1, double x0_norm_sq) {
  return 1.0 + std::exp(-m * omega1 * t) * std::pow(x0_norm_sq, m);
}

/// Monte Carlo curves of E|X(t, x0)|_H^{2m}, m = 1, 2, over paths
/// cfg.path_id .. cfg.path_id + n_paths - 1.
inline MomentReport estimate_moments(const TrajectoryConfig& cfg, const Model& model, const NoiseSpec& noise,
                                     int n_paths, unsigned workers = default_workers()) {
  require(n_paths >= 2, "moments: need at least 2 paths");
  auto recs = integrate_ensemble(cfg, model, noise, n_paths, workers, cfg.path_id);
  MomentReport r;
  r.n_paths = n_paths;
  r.omega1 = model.constants().omega1;
  r.x0_norm_sq = norm_H_sq(cfg.x0, model);
  r.times = recs[0].times;
  for (auto& t : r.times) t -= cfg.start_time;
  const std::size_t nt = r.times.size();
  for (int m = 0; m < 2; ++m) {
    r.mean[m].resize(nt);
    r.se[m].resize(nt);
    for (std::size_t i = 0; i < nt; ++i) {
      std::vector<double> v;
      v.reserve(recs.size());
      for (const auto& rec : recs) v.push_back(std::pow(rec.h_norm_sq[i], m + 1));
      auto ms = mean_se(v);
      r.mean[m][i] = ms.mean;
      r.se[m][i] = ms.se;
    }
    double c = 0;
    for (std::size_t i = 0; i < nt; ++i) {
      c = std::max(c, r.mean[m][i] / moment_envelope(r.times[i], m + 1, r.omega1, r.x0_norm_sq));
    }
    r.envelope_c[m] = c;
    std::vector<double> tx, y;
    for (std::size_t i = 0; i < nt; ++i) {
      if (r.times[i] >= 0.5 * cfg.T) {
        tx.push_back(r.times[i]);
        y.push_back(r.mean[m][i]);
      }
    }
    if (tx.size() >= 3) {
      auto fit = ols(tx, y);
      double level = mean_se(y).mean;
      r.flatness[m] = level > 0 ? std::abs(fit.slope) * 0.5 * cfg.T / level : 0.0;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Gaussian invariant law of the linear system dX = A_eta X dt + sqrt(Q) dW

/// Per-mode stationary covariances solving M_k S + S M_k^T + Q_k = 0.
inline std::vector<Mat2> linear_invariant_covariance(const Model& model, const NoiseSpec& noise) {
  if (!model.constant_p()) throw ConfigError("linear_invariant_covariance: needs constant p");
  validate(noise, model.n_modes());
  std::vector<Mat2> out;
  for (int k = 0; k < model.n_modes(); ++k) out.push_back(lyapunov(shifted_mode_matrix(k, model), mode_noise(noise, k)));
  return out;
}

inline double lyapunov_residual(const Mat2& m, const Mat2& s, const Mat2& q) {
  return (m * s + s * m.transpose() + q).cwiseAbs().maxCoeff();
}

/// E|X|_H^2 under the linear invariant law.
inline double linear_stationary_second_moment(const Model& model, const NoiseSpec& noise) {
  double t = 0;
  for (const auto& s : linear_invariant_covariance(model, noise)) t += trace_H(s, model.gamma());
  return t;
}

/// Variance of <X, h>_H under the linear invariant law.
inline double linear_projection_variance(const StateH& h, const Model& model, const NoiseSpec& noise) {
  auto cov = linear_invariant_covariance(model, noise);
  double v = 0;
  for (int k = 0; k < model.n_modes(); ++k) {
    Vec2 a(model.gamma() * h.u(k), h.w(k));
    v += a.dot(cov[static_cast<std::size_t>(k)] * a);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Functionals

struct Functional {
  std::string name;
  std::function<double(const StateH&)> eval;
};

inline Functional norm_H_functional(const Model& model) {
  return {"norm_H", [&model](const StateH& x) { return std::sqrt(norm_H_sq(x, model)); }};
}

inline Functional norm_V_functional(const Model& model) {
  return {"norm_V", [&model](const StateH& x) { return std::sqrt(norm_V_sq(x, model)); }};
}

inline Functional projection_functional(const StateH& h, const Model& model, std::string name = "projection") {
  return {std::move(name), [h, &model](const StateH& x) { return inner_product_H(x, h, model); }};
}

/// Real part of the cylinder exponential exp(i <x, h>_H); bounded by 1.
inline Functional cylinder_cos(const StateH& h, const Model& model, std::string name = "cylinder_cos") {
  return {std::move(name), [h, &model](const StateH& x) { return std::cos(inner_product_H(x, h, model)); }};
}

/// min(1, |x|_H / radius).
inline Functional norm_ramp(double radius, const Model& model) {
  require(radius > 0, "norm_ramp: radius must be > 0");
  return {"norm_ramp", [radius, &model](const StateH& x) { return std::min(1.0, std::sqrt(norm_H_sq(x, model)) / radius); }};
}

inline Functional constant_one() {
  return {"one", [](const StateH&) { return 1.0; }};
}

/// P_t phi(x) estimated from a sample of X(t, x).
inline MeanSe transition_semigroup(const Functional& phi, const std::vector<StateH>& states) {
  std::vector<double> v;
  v.reserve(states.size());
  for (const auto& s : states) v.push_back(phi.eval(s));
  return mean_se(v);
}

/// P_t phi(x) = E phi(X(t, x)) over n_paths fresh paths.
inline MeanSe transition_semigroup(const Functional& phi, double t, const StateH& x, const TrajectoryConfig& cfg,
                                   const Model& model, const NoiseSpec& noise, int n_paths,
                                   unsigned workers = default_workers()) {
  require(t >= 0, "transition_semigroup: t must be >= 0");
  if (t == 0) return transition_semigroup(phi, std::vector<StateH>(static_cast<std::size_t>(n_paths), x));
  TrajectoryConfig c = cfg;
  c.T = t;
  c.x0 = x;
  c.record_every = std::numeric_limits<int>::max();
  auto recs = integrate_ensemble(c, model, noise, n_paths, workers, cfg.path_id);
  std::vector<StateH> states;
  for (auto& r : recs) states.push_back(std::move(r.terminal));
  return transition_semigroup(phi, states);
}

// ---------------------------------------------------------------------------
// Empirical invariant measure

struct FunctionalSample {
  std::string name;
  std::vector<double> time_samples;
  std::vector<double> ensemble_samples;
  Histogram time_histogram;
  Histogram ensemble_histogram;
  KsResult ks;
};

struct EmpiricalMeasure {
  double burn_in = 0;
  double spacing = 0;
  std::size_t sample_count = 0;
  std::vector<StateH> time_states;      // thinned states of the long trajectory
  std::vector<StateH> ensemble_states;  // X(burn_in, x0) over independent paths
  std::vector<FunctionalSample> functionals;
};

struct InvariantMeasureConfig {
  double burn_in = 100.0;
  double spacing = 5.0;   // time between retained samples of the long trajectory
  int n_time_samples = 200;
  int n_ensemble = 128;
};

/// Time-average samples from one long path (path cfg.path_id) and ensemble
/// samples at t = burn_in from paths cfg.path_id + 1 .. n_ensemble, compared on
/// each functional by a two-sample KS test.
inline EmpiricalMeasure estimate_invariant_measure(const TrajectoryConfig& cfg, const InvariantMeasureConfig& im,
                                                   const std::vector<Functional>& functionals, const Model& model,
                                                   const NoiseSpec& noise, unsigned workers = default_workers()) {
  require(im.burn_in > 0 && im.spacing > 0, "invariant: burn_in and spacing must be > 0");
  require(im.n_time_samples >= 2 && im.n_ensemble >= 2, "invariant: need at least 2 samples of each kind");
  const double omega = model.constants().omega;
  require(im.burn_in >= 5.0 / omega - 1e-9, "invariant: burn_in must be >= 5 / omega");
  auto every = detail::lattice_multiple(im.spacing, cfg.dt);
  require(every && *every >= 1, "invariant: spacing must be a multiple of dt");

  EmpiricalMeasure em;
  em.burn_in = im.burn_in;
  em.spacing = im.spacing;
  em.sample_count = static_cast<std::size_t>(im.n_time_samples);

  const auto jobs = static_cast<std::size_t>(im.n_ensemble) + 1;
  std::vector<StateH> ens(static_cast<std::size_t>(im.n_ensemble));
  Integrator integ(model, noise, cfg.dt, cfg.lattice_dt(), cfg.drift(), cfg.eps);
  parallel_for(
      jobs,
      [&](std::size_t j) {
        TrajectoryConfig c = cfg;
        c.path_id = cfg.path_id + j;
        if (j == 0) {
          c.T = im.burn_in + im.spacing * (im.n_time_samples - 1);
          c.record_every = static_cast<int>(*every);
          c.keep_snapshots = true;
          auto rec = integrate(c, integ);
          for (std::size_t i = 0; i < rec.times.size(); ++i) {
            if (rec.times[i] - cfg.start_time >= im.burn_in - 1e-9) em.time_states.push_back(rec.snapshots[i]);
          }
        } else {
          c.T = im.burn_in;
          c.record_every = std::numeric_limits<int>::max();
          ens[j - 1] = integrate(c, integ).terminal;
        }
      },
      workers);
  em.ensemble_states = std::move(ens);
  em.sample_count = em.time_states.size();
  for (const auto& fn : functionals) {
    FunctionalSample fs;
    fs.name = fn.name;
    for (const auto& s : em.time_states) fs.time_samples.push_back(fn.eval(s));
    for (const auto& s : em.ensemble_states) fs.ensemble_samples.push_back(fn.eval(s));
    fs.time_histogram = histogram_fd(fs.time_samples);
    fs.ensemble_histogram = histogram_fd(fs.ensemble_samples);
    fs.ks = ks_two_sample(fs.time_samples, fs.ensemble_samples);
    em.functionals.push_back(std::move(fs));
  }
  return em;
}

struct MomentIntegral {
  int m = 1;
  MeanSe norm_moment;     // |x|_H^{2m}
  MeanSe f_eta_moment;    // |F_eta(x)|_H^{2m}
};

/// Sample moments of |x|_H^{2m} and |F_eta(x)|_H^{2m} under an empirical measure.
inline MomentIntegral invariant_moment_integral(int m, const std::vector<StateH>& samples, const Model& model) {
  require(m >= 1, "invariant_moment_integral: m must be >= 1");
  require(!samples.empty(), "invariant_moment_integral: empty sample");
  std::vector<double> a, b;
  for (const auto& s : samples) {
    a.push_back(std::pow(norm_H_sq(s, model), m));
    b.push_back(std::pow(norm_H_sq(apply_F_eta(s, model), model), m));
  }
  return {m, mean_se(a), mean_se(b)};
}

}  // namespace fhn

#endif  // FHN_ERGODICS_HPP
