#ifndef FHN_SOLVER_HPP
#define FHN_SOLVER_HPP

// Exponential Euler-Maruyama for dX = (A X + F(X)) dt + sqrt(Q) dW in the
// truncated eigenbasis, plus the ensemble drivers built on it: the
// eps-regularised family, synchronous coupling and backward-in-time starts.
//
// The linear part is taken per mode as L_k = [[mu_k - min p + eta, -1],
// [gamma, -alpha]] and advanced exactly; the explicit remainder is
// f_eta(u) (or f_{eta,eps}(u)) plus (min p - p(xi)) u, so the simulated drift is
// always A x + F(x) (or its regularisation). Noise is the exact stochastic
// convolution of L_k over the step, assembled from an absolute-time lattice of
// width noise_dt.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fhn/errors.hpp"
#include "fhn/mat2.hpp"
#include "fhn/model.hpp"
#include "fhn/noise.hpp"
#include "fhn/nonlinearity.hpp"
#include "fhn/parallel.hpp"
#include "fhn/stats.hpp"

namespace fhn {

enum class DriftKind {
  cubic,        // f_eta, i.e. the raw FitzHugh-Nagumo drift
  regularized,  // f_{eta,eps}
  linear,       // F = 0 (Ornstein-Uhlenbeck case)
};

struct TrajectoryConfig {
  double T = 1.0;
  double dt = 1e-3;
  StateH x0;
  double eps = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t path_id = 0;
  int record_every = 1;
  double start_time = 0.0;
  bool linear = false;
  double noise_dt = 0.0;  // lattice width; 0 means dt
  bool keep_snapshots = false;

  DriftKind drift() const {
    if (linear) return DriftKind::linear;
    return eps > 0 ? DriftKind::regularized : DriftKind::cubic;
  }
  double lattice_dt() const { return noise_dt > 0 ? noise_dt : dt; }
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> h_norm_sq;
  std::vector<double> v_norm_sq;
  std::vector<StateH> snapshots;
  StateH terminal;
  std::int64_t substeps = 0;  // extra deterministic sub-steps forced by the stability ceiling
};

namespace detail {

/// Integer n with |n * unit - value| small relative to unit, or nullopt.
inline std::optional<std::int64_t> lattice_multiple(double value, double unit) {
  double q = value / unit;
  double r = std::round(q);
  if (std::abs(q - r) > 1e-6) return std::nullopt;
  return static_cast<std::int64_t>(r);
}

}  // namespace detail

inline void validate(const TrajectoryConfig& cfg, const Model& model) {
  require(std::isfinite(cfg.T) && cfg.T >= 0, "run.T must be >= 0");
  require(std::isfinite(cfg.dt) && cfg.dt > 0, "run.dt must be > 0");
  require(cfg.record_every >= 1, "run.record_every must be >= 1");
  require(std::isfinite(cfg.eps) && cfg.eps >= 0, "run.eps must be >= 0");
  require(cfg.noise_dt >= 0, "run.noise_dt must be >= 0");
  require(cfg.x0.size() == model.n_modes() && cfg.x0.w.size() == model.n_modes(),
          "run.x0 must have n_modes coefficients per component");
  require(cfg.x0.finite(), "run.x0 must be finite");
  const double q = cfg.lattice_dt();
  auto m = detail::lattice_multiple(cfg.dt, q);
  require(m && *m >= 1, "run.dt must be a positive integer multiple of run.noise_dt");
  require(detail::lattice_multiple(cfg.start_time, q).has_value(),
          "run.start_time must lie on the noise lattice (a multiple of noise_dt)");
  require(detail::lattice_multiple(cfg.T, cfg.dt).has_value(), "run.T must be an integer multiple of run.dt");
}

/// One-step map of the scheme; immutable and shareable across threads.
class Integrator {
 public:
  static constexpr int max_levels = 24;

  Integrator(const Model& model, const NoiseSpec& noise, double dt, double noise_dt, DriftKind drift,
             double eps = 0.0)
      : model_(&model), noise_(&noise), dt_(dt), drift_(drift), dp_{model.params().xi1, eps} {
    require(dt > 0, "integrator: dt must be > 0");
    validate(noise, model.n_modes());
    if (drift == DriftKind::regularized) require(eps > 0, "integrator: regularized drift needs eps > 0");
    const double q = noise_dt > 0 ? noise_dt : dt;
    auto m = detail::lattice_multiple(dt, q);
    require(m && *m >= 1, "integrator: dt must be an integer multiple of noise_dt");
    quanta_ = *m;
    noise_dt_ = dt / static_cast<double>(quanta_);
    const int n = model.n_modes();
    for (int k = 0; k < n; ++k) modes_.push_back(shifted_mode_matrix(k, model));
    levels_.resize(max_levels + 1);
    for (int l = 0; l <= max_levels; ++l) {
      double h = std::ldexp(dt, -l);
      levels_[static_cast<std::size_t>(l)].h = h;
      for (const auto& mk : modes_) {
        levels_[static_cast<std::size_t>(l)].expm.push_back(expm(h * mk));
        levels_[static_cast<std::size_t>(l)].phi.push_back(h * phi1(h * mk));
      }
    }
    zero_noise_ = noise.is_zero();
    if (!zero_noise_) {
      for (int k = 0; k < n; ++k) {
        auto prop = ou_propagator(modes_[static_cast<std::size_t>(k)], mode_noise(noise, k), noise_dt_);
        lattice_expm_.push_back(prop.transition);
        lattice_chol_.push_back(prop.chol);
      }
    }
    has_explicit_term_ = drift != DriftKind::linear || !model.constant_p();
  }

  double dt() const { return dt_; }
  double noise_dt() const { return noise_dt_; }
  std::int64_t quanta_per_step() const { return quanta_; }
  DriftKind drift() const { return drift_; }
  const Model& model() const { return *model_; }

  /// Explicit part of the drift in spectral coordinates; max_u2 receives max_j u(xi_j)^2.
  StateH explicit_term(const StateH& x, double* max_u2 = nullptr) const {
    StateH out = StateH::zero(x.size());
    if (!has_explicit_term_) {
      if (max_u2) *max_u2 = 0;
      return out;
    }
    Eigen::VectorXd g = model_->to_grid(x.u);
    if (max_u2) *max_u2 = g.cwiseAbs2().maxCoeff();
    const bool var_p = !model_->constant_p();
    const double pbar = model_->p_min();
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      double u = g(j);
      double v = 0;
      if (drift_ == DriftKind::cubic) {
        v = f_eta(u, dp_);
      } else if (drift_ == DriftKind::regularized) {
        v = f_eta_eps(u, dp_);
      }
      if (var_p) v += (pbar - model_->p_grid()(j)) * u;
      g(j) = v;
    }
    out.u = model_->project(g);
    return out;
  }

  /// Deterministic part of one step: exp(dt L) x + dt phi1(dt L) N(x). With the raw
  /// cubic, the step is split in halves while dt > 0.1 / (1 + max u^2).
  StateH deterministic_step(const StateH& x, std::int64_t* substeps = nullptr) const {
    StateH y = x;
    advance(y, 0, substeps);
    return y;
  }

  /// Stochastic convolution of L over [t_i, t_i + dt), t_i = first_interval * noise_dt.
  StateH noise_increment(std::int64_t first_interval, const NoiseStream& stream) const {
    const int n = model_->n_modes();
    StateH z = StateH::zero(n);
    if (zero_noise_) return z;
    for (std::int64_t j = 0; j < quanta_; ++j) {
      const std::uint64_t key = stream.interval_key(first_interval + j);
      for (int k = 0; k < n; ++k) {
        auto ku = static_cast<std::size_t>(k);
        auto e = NoiseStream::normals_at(key, k);
        Vec2 acc = lattice_expm_[ku] * Vec2(z.u(k), z.w(k)) + lattice_chol_[ku] * Vec2(e[0], e[1]);
        z.u(k) = acc(0);
        z.w(k) = acc(1);
      }
    }
    return z;
  }

  StateH step(const StateH& x, std::int64_t first_interval, const NoiseStream& stream,
              StateH* noise_out = nullptr, std::int64_t* substeps = nullptr) const {
    StateH y = deterministic_step(x, substeps);
    StateH z = noise_increment(first_interval, stream);
    y += z;
    if (noise_out) *noise_out = std::move(z);
    return y;
  }

 private:
  struct Level {
    double h = 0;
    std::vector<Mat2> expm;
    std::vector<Mat2> phi;
  };

  void advance(StateH& x, int level, std::int64_t* substeps) const {
    double max_u2 = 0;
    StateH nl = explicit_term(x, &max_u2);
    const auto& lv = levels_[static_cast<std::size_t>(level)];
    if (!std::isfinite(max_u2)) throw BlowUpError(-1, std::numeric_limits<double>::quiet_NaN(), "non-finite state");
    if (drift_ == DriftKind::cubic && lv.h > 0.1 / (1.0 + max_u2)) {
      if (level == max_levels) {
        throw BlowUpError(-1, std::numeric_limits<double>::quiet_NaN(),
                          "stability ceiling needs more than 2^" + std::to_string(max_levels) + " sub-steps");
      }
      if (substeps) *substeps += 1;
      advance(x, level + 1, substeps);
      advance(x, level + 1, substeps);
      return;
    }
    for (int k = 0; k < x.size(); ++k) {
      auto ku = static_cast<std::size_t>(k);
      Vec2 v(x.u(k), x.w(k));
      Vec2 r = lv.expm[ku] * v + lv.phi[ku] * Vec2(nl.u(k), nl.w(k));
      x.u(k) = r(0);
      x.w(k) = r(1);
    }
  }

  const Model* model_;
  const NoiseSpec* noise_;
  double dt_;
  double noise_dt_ = 0;
  std::int64_t quanta_ = 1;
  DriftKind drift_;
  DriftParams dp_;
  bool zero_noise_ = false;
  bool has_explicit_term_ = true;
  std::vector<Mat2> modes_;
  std::vector<Level> levels_;
  std::vector<Mat2> lattice_expm_;
  std::vector<Mat2> lattice_chol_;
};

/// Single step with a fresh integrator; convenient for tests, slow in loops.
inline StateH step(const StateH& x, double dt, double eps, const Model& model, const NoiseSpec& noise,
                   const NoiseStream& stream, std::int64_t interval, bool linear = false) {
  DriftKind kind = linear ? DriftKind::linear : (eps > 0 ? DriftKind::regularized : DriftKind::cubic);
  Integrator integ(model, noise, dt, dt, kind, eps);
  return integ.step(x, interval, stream);
}

/// Lattice index of the interval that starts at time t.
inline std::int64_t lattice_index(double t, double noise_dt) {
  return static_cast<std::int64_t>(std::llround(t / noise_dt));
}

/// Runs one path with a caller-supplied integrator. observer(n, t, x) is called
/// after every step (n = 1..n_steps) and once for the initial state (n = 0).
template <class Observer>
TrajectoryRecord integrate_with(const TrajectoryConfig& cfg, const Integrator& integ, Observer&& observer) {
  const Model& model = integ.model();
  validate(cfg, model);
  const auto n_steps = static_cast<std::int64_t>(std::llround(cfg.T / cfg.dt));
  const NoiseStream stream{cfg.master_seed, cfg.path_id};
  const std::int64_t i0 = lattice_index(cfg.start_time, integ.noise_dt());
  TrajectoryRecord rec;
  auto record = [&](double t, const StateH& x) {
    rec.times.push_back(t);
    rec.h_norm_sq.push_back(norm_H_sq(x, model));
    rec.v_norm_sq.push_back(norm_V_sq(x, model));
    if (cfg.keep_snapshots) rec.snapshots.push_back(x);
  };
  StateH x = cfg.x0;
  record(cfg.start_time, x);
  observer(std::int64_t{0}, cfg.start_time, x);
  for (std::int64_t n = 1; n <= n_steps; ++n) {
    const double t = cfg.start_time + static_cast<double>(n) * cfg.dt;
    try {
      x = integ.step(x, i0 + (n - 1) * integ.quanta_per_step(), stream, nullptr, &rec.substeps);
    } catch (const BlowUpError& e) {
      throw BlowUpError(n, t, "path " + std::to_string(cfg.path_id) + ": blow-up");
    }
    if (!x.finite()) throw BlowUpError(n, t, "path " + std::to_string(cfg.path_id) + ": non-finite state");
    if (n % cfg.record_every == 0 || n == n_steps) record(t, x);
    observer(n, t, x);
  }
  rec.terminal = std::move(x);
  return rec;
}

inline TrajectoryRecord integrate(const TrajectoryConfig& cfg, const Integrator& integ) {
  return integrate_with(cfg, integ, [](std::int64_t, double, const StateH&) {});
}

inline TrajectoryRecord integrate(const TrajectoryConfig& cfg, const Model& model, const NoiseSpec& noise) {
  Integrator integ(model, noise, cfg.dt, cfg.lattice_dt(), cfg.drift(), cfg.eps);
  return integrate(cfg, integ);
}

/// Paths 0..n_paths-1 of the same configuration (path_id = first_path + i).
inline std::vector<TrajectoryRecord> integrate_ensemble(const TrajectoryConfig& cfg, const Model& model,
                                                        const NoiseSpec& noise, int n_paths,
                                                        unsigned workers = default_workers(),
                                                        std::uint64_t first_path = 0) {
  require(n_paths >= 1, "paths must be >= 1");
  validate(cfg, model);
  Integrator integ(model, noise, cfg.dt, cfg.lattice_dt(), cfg.drift(), cfg.eps);
  std::vector<TrajectoryRecord> out(static_cast<std::size_t>(n_paths));
  parallel_for(
      out.size(),
      [&](std::size_t i) {
        TrajectoryConfig c = cfg;
        c.path_id = first_path + i;
        out[i] = integrate(c, integ);
      },
      workers);
  return out;
}

// ---------------------------------------------------------------------------
// eps-regularised family

struct EpsPairRow {
  double eps = 0;
  double lambda = 0;
  double distance = 0;  // mean over paths of sup_t |X_eps - X_lambda|_H^2
  double se = 0;
};

struct EpsConvergenceReport {
  std::vector<EpsPairRow> rows;              // (eps, eps/2) for every ladder entry
  std::vector<double> eps_values;            // all simulated eps, descending
  std::vector<double> f_eps_integral;        // mean of int_0^T |f_{eta,eps}(u)|^2_{L^2} dt per eps value
  std::vector<double> f_eps_integral_se;
  LinearFit slope_fit;                       // log D(eps, eps/2) against log eps
  bool monotone = true;                      // D nonincreasing along the ladder within 2 SE
  int n_paths = 0;
};

/// Runs X_eps for every eps in the ladder and every eps/2 in lockstep under shared
/// noise and reports E sup_{t <= T} |X_eps - X_{eps/2}|_H^2.
inline EpsConvergenceReport eps_convergence_study(const std::vector<double>& ladder, const TrajectoryConfig& cfg,
                                                  const Model& model, const NoiseSpec& noise, int n_paths,
                                                  unsigned workers = default_workers()) {
  require(!ladder.empty(), "convergence: eps ladder must be nonempty");
  require(n_paths >= 2, "convergence: need at least 2 paths");
  for (double e : ladder) require(e > 0, "convergence: eps values must be > 0");
  validate(cfg, model);
  std::vector<double> eps_values;
  for (double e : ladder) {
    eps_values.push_back(e);
    eps_values.push_back(0.5 * e);
  }
  std::sort(eps_values.begin(), eps_values.end(), std::greater<>());
  eps_values.erase(std::unique(eps_values.begin(), eps_values.end()), eps_values.end());
  const std::size_t ne = eps_values.size();
  auto index_of = [&](double e) {
    return static_cast<std::size_t>(std::find(eps_values.begin(), eps_values.end(), e) - eps_values.begin());
  };

  std::vector<Integrator> integs;
  for (double e : eps_values) integs.emplace_back(model, noise, cfg.dt, cfg.lattice_dt(), DriftKind::regularized, e);
  const auto n_steps = static_cast<std::int64_t>(std::llround(cfg.T / cfg.dt));
  const std::int64_t i0 = lattice_index(cfg.start_time, integs[0].noise_dt());

  std::vector<std::vector<double>> sup_d(ladder.size(), std::vector<double>(static_cast<std::size_t>(n_paths)));
  std::vector<std::vector<double>> fint(ne, std::vector<double>(static_cast<std::size_t>(n_paths)));
  parallel_for(
      static_cast<std::size_t>(n_paths),
      [&](std::size_t path) {
        NoiseStream stream{cfg.master_seed, cfg.path_id + path};
        std::vector<StateH> xs(ne, cfg.x0);
        std::vector<double> best(ladder.size(), 0.0);
        std::vector<double> acc(ne, 0.0);
        for (std::int64_t n = 0; n < n_steps; ++n) {
          StateH z = integs[0].noise_increment(i0 + n * integs[0].quanta_per_step(), stream);
          for (std::size_t e = 0; e < ne; ++e) {
            Eigen::VectorXd g = model.to_grid(xs[e].u);
            DriftParams dp{model.params().xi1, eps_values[e]};
            double s = 0;
            for (Eigen::Index j = 0; j < g.size(); ++j) {
              double v = f_eta_eps(g(j), dp);
              s += v * v;
            }
            acc[e] += cfg.dt * s / model.n_grid();
            xs[e] = integs[e].deterministic_step(xs[e]) + z;
            if (!xs[e].finite()) {
              throw BlowUpError(n + 1, cfg.start_time + static_cast<double>(n + 1) * cfg.dt,
                                "convergence: non-finite state at eps = " + std::to_string(eps_values[e]));
            }
          }
          for (std::size_t l = 0; l < ladder.size(); ++l) {
            const auto& a = xs[index_of(ladder[l])];
            const auto& b = xs[index_of(0.5 * ladder[l])];
            best[l] = std::max(best[l], norm_H_sq(a - b, model));
          }
        }
        for (std::size_t l = 0; l < ladder.size(); ++l) sup_d[l][path] = best[l];
        for (std::size_t e = 0; e < ne; ++e) fint[e][path] = acc[e];
      },
      workers);

  EpsConvergenceReport rep;
  rep.n_paths = n_paths;
  rep.eps_values = eps_values;
  std::vector<double> lx, ly;
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    auto ms = mean_se(sup_d[l]);
    rep.rows.push_back({ladder[l], 0.5 * ladder[l], ms.mean, ms.se});
    if (ms.mean > 0) {
      lx.push_back(std::log(ladder[l]));
      ly.push_back(std::log(ms.mean));
    }
  }
  for (std::size_t e = 0; e < ne; ++e) {
    auto ms = mean_se(fint[e]);
    rep.f_eps_integral.push_back(ms.mean);
    rep.f_eps_integral_se.push_back(ms.se);
  }
  if (lx.size() >= 2) rep.slope_fit = ols(lx, ly);
  // Ladder order is arbitrary in the input; compare along decreasing eps.
  std::vector<EpsPairRow> sorted = rep.rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.eps > b.eps; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].distance > sorted[i - 1].distance + 2 * std::hypot(sorted[i].se, sorted[i - 1].se)) {
      rep.monotone = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Synchronous coupling

struct CouplingReport {
  std::vector<double> times;
  std::vector<std::vector<double>> distance_sq;  // [path][time] |X(t,x) - X(t,xbar)|_H^2
  double omega = 0;
  double initial_sq = 0;
  double max_envelope_ratio = 0;  // max over paths, t of d(t) / (e^{-2 omega t} d(0))
  double min_rate = 0;            // smallest per-path fitted exponent on [T/4, 3T/4]
  double min_r2 = 0;
  std::vector<double> rates;
  std::vector<double> r2;
};

/// Drives X(., x) and X(., xbar) with the same noise and records their distance.
inline CouplingReport coupled_run(const StateH& x, const StateH& x_bar, const TrajectoryConfig& cfg,
                                  const Model& model, const NoiseSpec& noise, int n_paths,
                                  unsigned workers = default_workers()) {
  require(n_paths >= 1, "couple: paths must be >= 1");
  TrajectoryConfig base = cfg;
  base.x0 = x;
  validate(base, model);
  check_same_size(x, x_bar);
  Integrator integ(model, noise, cfg.dt, cfg.lattice_dt(), cfg.drift(), cfg.eps);
  CouplingReport rep;
  rep.omega = model.constants().omega;
  rep.initial_sq = norm_H_sq(x - x_bar, model);
  rep.distance_sq.resize(static_cast<std::size_t>(n_paths));
  std::vector<std::vector<double>> times(static_cast<std::size_t>(n_paths));
  parallel_for(
      static_cast<std::size_t>(n_paths),
      [&](std::size_t path) {
        TrajectoryConfig ca = base;
        ca.path_id = cfg.path_id + path;
        ca.keep_snapshots = true;
        TrajectoryConfig cb = ca;
        cb.x0 = x_bar;
        auto ra = integrate(ca, integ);
        auto rb = integrate(cb, integ);
        auto& d = rep.distance_sq[path];
        for (std::size_t i = 0; i < ra.snapshots.size(); ++i) d.push_back(norm_H_sq(ra.snapshots[i] - rb.snapshots[i], model));
        times[path] = ra.times;
      },
      workers);
  rep.times = times[0];
  for (auto& t : rep.times) t -= cfg.start_time;
  rep.min_rate = std::numeric_limits<double>::infinity();
  rep.min_r2 = 1.0;
  for (const auto& d : rep.distance_sq) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (rep.initial_sq > 0) {
        double env = std::exp(-2.0 * rep.omega * rep.times[i]) * rep.initial_sq;
        rep.max_envelope_ratio = std::max(rep.max_envelope_ratio, d[i] / env);
      }
    }
    std::vector<double> tx, ly;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (rep.times[i] >= 0.25 * cfg.T && rep.times[i] <= 0.75 * cfg.T && d[i] > 0) {
        tx.push_back(rep.times[i]);
        ly.push_back(std::log(d[i]));
      }
    }
    if (tx.size() >= 3) {
      auto fit = ols(tx, ly);
      rep.rates.push_back(-fit.slope);
      rep.r2.push_back(fit.r2);
      rep.min_rate = std::min(rep.min_rate, -fit.slope);
      rep.min_r2 = std::min(rep.min_r2, fit.r2);
    }
  }
  if (rep.rates.empty()) {
    rep.min_rate = std::numeric_limits<double>::quiet_NaN();
    rep.min_r2 = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Backward-in-time starts

struct BackwardReport {
  std::vector<double> ladder;
  std::vector<std::vector<StateH>> states;  // [ladder index][path] X_lambda(0, x0)
  std::vector<double> second_moment;        // mean |X_lambda(0)|_H^2
  std::vector<double> second_moment_se;
  // Pairwise mean distances E|X_lambda(0) - X_gamma(0)|_H^2 for gamma < lambda.
  struct Pair {
    double gamma = 0;
    double lambda = 0;
    double distance = 0;
    double se = 0;
  };
  std::vector<Pair> pairs;
  LinearFit consecutive_fit;  // log distance of consecutive ladder pairs against gamma
  double rate = 0;            // -slope of consecutive_fit
  int n_paths = 0;
};

/// Starts the system from x0 at times -lambda for every lambda in the ladder and
/// evolves to time 0 with absolute-time noise, so all runs share one noise path.
inline BackwardReport backward_run(const std::vector<double>& ladder, const StateH& x0, const TrajectoryConfig& cfg,
                                   const Model& model, const NoiseSpec& noise, int n_paths,
                                   unsigned workers = default_workers()) {
  require(ladder.size() >= 1, "backward: ladder must be nonempty");
  require(std::is_sorted(ladder.begin(), ladder.end()), "backward: ladder must be increasing");
  require(n_paths >= 2, "backward: need at least 2 paths");
  for (double l : ladder) require(l > 0, "backward: ladder entries must be > 0");
  Integrator integ(model, noise, cfg.dt, cfg.lattice_dt(), cfg.drift(), cfg.eps);
  BackwardReport rep;
  rep.ladder = ladder;
  rep.n_paths = n_paths;
  rep.states.assign(ladder.size(), std::vector<StateH>(static_cast<std::size_t>(n_paths)));
  std::vector<TrajectoryConfig> cfgs;
  for (double l : ladder) {
    TrajectoryConfig c = cfg;
    c.x0 = x0;
    c.T = l;
    c.start_time = -l;
    c.record_every = std::numeric_limits<int>::max();
    validate(c, model);
    cfgs.push_back(c);
  }
  const std::size_t nl = ladder.size();
  parallel_for(
      nl * static_cast<std::size_t>(n_paths),
      [&](std::size_t job) {
        std::size_t l = job % nl;
        std::size_t path = job / nl;
        TrajectoryConfig c = cfgs[l];
        c.path_id = cfg.path_id + path;
        rep.states[l][path] = integrate(c, integ).terminal;
      },
      workers);
  for (std::size_t l = 0; l < nl; ++l) {
    std::vector<double> m2;
    for (const auto& s : rep.states[l]) m2.push_back(norm_H_sq(s, model));
    auto ms = mean_se(m2);
    rep.second_moment.push_back(ms.mean);
    rep.second_moment_se.push_back(ms.se);
  }
  for (std::size_t g = 0; g < nl; ++g) {
    for (std::size_t l = g + 1; l < nl; ++l) {
      std::vector<double> d;
      for (std::size_t p = 0; p < static_cast<std::size_t>(n_paths); ++p) {
        d.push_back(norm_H_sq(rep.states[l][p] - rep.states[g][p], model));
      }
      auto ms = mean_se(d);
      rep.pairs.push_back({ladder[g], ladder[l], ms.mean, ms.se});
    }
  }
  std::vector<double> gx, ly;
  for (const auto& pr : rep.pairs) {
    bool consecutive = false;
    for (std::size_t g = 0; g + 1 < nl; ++g) consecutive |= pr.gamma == ladder[g] && pr.lambda == ladder[g + 1];
    if (consecutive && pr.distance > 0) {
      gx.push_back(pr.gamma);
      ly.push_back(std::log(pr.distance));
    }
  }
  if (gx.size() >= 2) {
    rep.consecutive_fit = ols(gx, ly);
    rep.rate = -rep.consecutive_fit.slope;
  }
  return rep;
}

}  // namespace fhn

#endif  // FHN_SOLVER_HPP
