#ifndef FHN_ACCEPTANCE_HPP
#define FHN_ACCEPTANCE_HPP

// The twelve acceptance criteria, each returning a pass/fail verdict with the
// measured quantities. `quick` shrinks sample sizes for smoke runs; verdicts at
// quick sizes are indicative only.

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fhn/commands.hpp"
#include "fhn/ergodics.hpp"
#include "fhn/io.hpp"
#include "fhn/kolmogorov.hpp"
#include "fhn/model.hpp"
#include "fhn/noise.hpp"
#include "fhn/nonlinearity.hpp"
#include "fhn/solver.hpp"
#include "fhn/stats.hpp"

namespace fhn {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string summary;
  json data;
  double seconds = 0;
};

struct AcceptanceOptions {
  bool quick = false;
  std::uint64_t seed = 20240611;
  unsigned workers = default_workers();
  std::filesystem::path scratch = std::filesystem::temp_directory_path();
};

namespace acceptance {

inline std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

/// Random state with coefficient scale `amp / (1 + k)` in both channels.
inline StateH random_state(const Model& model, std::mt19937_64& gen, double amp) {
  std::normal_distribution<double> nd;
  StateH x = model.zero_state();
  for (int k = 0; k < model.n_modes(); ++k) {
    x.u(k) = amp * nd(gen) / (1.0 + k);
    x.w(k) = amp * nd(gen) / (1.0 + k);
  }
  return x;
}

inline CriterionResult drift_identities(const AcceptanceOptions& opt) {
  CriterionResult r{1, "drift identities", false, "", json::object(), 0};
  std::mt19937_64 gen(opt.seed + 1);
  std::uniform_real_distribution<double> xi_dist(0.01, 0.99), u_dist(-10.0, 10.0);
  const int n_xi = opt.quick ? 5 : 20;
  const int n_u = opt.quick ? 100000 : 1000000;
  const int n_grid = 10000000;
  double worst_identity = 0, worst_max = 0, worst_argmax = 0;
  for (int i = 0; i < n_xi; ++i) {
    DriftParams dp{xi_dist(gen), 0.0};
    const double eta = dp.eta();
    for (int j = 0; j < n_u; ++j) {
      double u = u_dist(gen);
      double err = std::abs(f(u, dp.xi1) - eta * u - f_eta(u, dp));
      worst_identity = std::max(worst_identity, err / (1 + std::abs(u * u * u)));
    }
    // max of f' by centred differences on a uniform grid over [-100, 100]
    const double h = 1e-5, lo = -100.0, step = 200.0 / (n_grid - 1);
    double best = -1e300, arg = 0;
    for (int j = 0; j < n_grid; ++j) {
      double u = lo + step * j;
      double d = (f(u + h, dp.xi1) - f(u - h, dp.xi1)) / (2 * h);
      if (d > best) {
        best = d;
        arg = u;
      }
    }
    worst_max = std::max(worst_max, std::abs(best - eta));
    worst_argmax = std::max(worst_argmax, std::abs(arg - dp.xi0()));
  }
  r.passed = worst_identity <= 1e-12 && worst_max <= 1e-8;
  r.data = {{"xi1_samples", n_xi},
            {"u_samples_per_xi1", n_u},
            {"max_identity_error_scaled", worst_identity},
            {"max_abs_fprime_minus_eta", worst_max},
            {"max_argmax_minus_xi0", worst_argmax}};
  r.summary = "identity err " + fmt("%.2e", worst_identity) + " (tol 1e-12), |max f' - eta| " +
              fmt("%.2e", worst_max) + " (tol 1e-8)";
  return r;
}

inline CriterionResult monotonicity(const AcceptanceOptions& opt) {
  CriterionResult r{2, "monotonicity", false, "", json::object(), 0};
  Model model(ModelParams{});
  std::mt19937_64 gen(opt.seed + 2);
  std::uniform_real_distribution<double> amp(0.05, 3.0);
  const int pairs = opt.quick ? 2000 : 10000;
  double worst = -1e300;
  for (int i = 0; i < pairs; ++i) {
    StateH x = random_state(model, gen, amp(gen));
    StateH y = random_state(model, gen, amp(gen));
    double gap = monotonicity_gap(x, y, model);
    worst = std::max(worst, gap / (1 + norm_H_sq(x - y, model)));
  }
  double worst_prime = -1e300;
  const std::vector<double> eps_values{1e-3, 1e-2, 1e-1, 1.0, 10.0};
  const int nu = opt.quick ? 20001 : 200001;
  for (double e : eps_values) {
    DriftParams dp{0.5, e};
    for (int j = 0; j < nu; ++j) {
      double u = -50.0 + 100.0 * j / (nu - 1);
      worst_prime = std::max(worst_prime, f_eta_eps_prime(u, dp));
    }
  }
  r.passed = worst <= 1e-9 && worst_prime <= 1e-12;
  r.data = {{"pairs", pairs}, {"max_scaled_gap", worst}, {"max_fprime_eps", worst_prime}};
  r.summary = "max gap/(1+|x-y|^2) " + fmt("%.2e", worst) + " (tol 1e-9), max f'_eta,eps " + fmt("%.2e", worst_prime) +
              " (tol 1e-12)";
  return r;
}

inline CriterionResult dissipativity(const AcceptanceOptions& opt) {
  CriterionResult r{3, "operator dissipativity", false, "", json::object(), 0};
  ModelParams variable;
  variable.c = Profile::function([](double xi) { return 1.0 + 0.5 * xi; }, "affine:1:0.5");
  std::vector<double> ptab;
  for (double xi : collocation_grid(variable.n_grid)) ptab.push_back(0.3 + 0.2 * xi * xi);
  variable.p = Profile::table(ptab);
  const int states = opt.quick ? 2000 : 10000;
  std::mt19937_64 gen(opt.seed + 3);
  std::uniform_real_distribution<double> amp(0.01, 10.0);
  double worst1 = -1e300, worst2 = -1e300;
  json per_model = json::array();
  for (const ModelParams& mp : {ModelParams{}, variable}) {
    Model model(mp);
    const auto& d = model.constants();
    double w1 = -1e300, w2 = -1e300;
    for (int i = 0; i < states; ++i) {
      StateH x = random_state(model, gen, amp(gen));
      double a = inner_product_H(apply_A_eta(x, model), x, model);
      double h2 = norm_H_sq(x, model), v2 = norm_V_sq(x, model);
      w1 = std::max(w1, (a + d.omega1 * h2) / h2);
      w2 = std::max(w2, (a + d.omega2 * v2) / v2);
    }
    per_model.push_back({{"omega1", d.omega1}, {"omega2", d.omega2}, {"max_excess_H", w1}, {"max_excess_V", w2}});
    worst1 = std::max(worst1, w1);
    worst2 = std::max(worst2, w2);
  }
  r.passed = worst1 <= 1e-9 && worst2 <= 1e-9;
  r.data = {{"states_per_model", states}, {"models", per_model}};
  r.summary = "max (<A_eta x,x> + w1|x|^2)/|x|^2 " + fmt("%.2e", worst1) + ", V-form " + fmt("%.2e", worst2) +
              " (tol 1e-9; constant and variable coefficients)";
  return r;
}

inline CriterionResult trace_diagnostics(const AcceptanceOptions&) {
  CriterionResult r{4, "trace diagnostics", false, "", json::object(), 0};
  Model model(ModelParams{});
  NoiseSpec noise = NoiseSpec::power_law(model.n_modes());
  boost::math::quadrature::exp_sinh<double> integrator;
  double quad = 0;
  for (int k = 0; k < model.n_modes(); ++k) {
    Mat2 m = shifted_mode_matrix(k, model);
    Mat2 q = mode_noise(noise, k);
    auto density = [&](double s) {
      Mat2 e = expm(s * m);
      return trace_H(e * q * e.transpose(), model.gamma());
    };
    quad += integrator.integrate(density, 1e-14);
  }
  double closed = convolution_trace_integral(model, noise, std::numeric_limits<double>::infinity());
  double bound = convolution_trace_bound(model, noise);
  double rel = std::abs(quad - closed) / closed;
  r.passed = rel <= 1e-8 && closed <= bound * (1 + 1e-9);
  r.data = {{"quadrature", quad}, {"closed_form", closed}, {"relative_difference", rel}, {"bound", bound}};
  r.summary = "quadrature " + fmt("%.12g", quad) + " vs closed " + fmt("%.12g", closed) + " (rel " + fmt("%.1e", rel) +
              "), bound Tr(Q)/(2w) " + fmt("%.6g", bound);
  return r;
}

inline CriterionResult linear_gaussian_oracle(const AcceptanceOptions& opt) {
  CriterionResult r{5, "linear-case Gaussian oracle", false, "", json::object(), 0};
  Model model(ModelParams{});
  NoiseSpec noise = NoiseSpec::power_law(model.n_modes());
  auto target = linear_invariant_covariance(model, noise);
  const int paths = opt.quick ? 64 : 256;
  const int n_check = 8;
  const double burn = 100.0, span = opt.quick ? 200.0 : 400.0, dt = 0.05;
  const int every = 10;
  TrajectoryConfig cfg;
  cfg.dt = dt;
  cfg.T = burn + span;
  cfg.x0 = model.zero_state();
  cfg.linear = true;
  cfg.master_seed = opt.seed + 5;
  cfg.record_every = std::numeric_limits<int>::max();
  Integrator integ(model, noise, dt, dt, DriftKind::linear);
  std::vector<std::vector<Mat2>> acc(static_cast<std::size_t>(paths), std::vector<Mat2>(n_check, Mat2::Zero()));
  std::vector<long> counts(static_cast<std::size_t>(paths), 0);
  parallel_for(
      static_cast<std::size_t>(paths),
      [&](std::size_t p) {
        TrajectoryConfig c = cfg;
        c.path_id = p;
        integrate_with(c, integ, [&](std::int64_t n, double t, const StateH& x) {
          if (t < burn - 1e-9 || n % every != 0) return;
          for (int k = 0; k < n_check; ++k) {
            Vec2 v(x.u(k), x.w(k));
            acc[p][static_cast<std::size_t>(k)] += v * v.transpose();
          }
          ++counts[p];
        });
      },
      opt.workers);
  double worst = 0;
  long total = 0;
  for (auto c : counts) total += c;
  json modes = json::array();
  for (int k = 0; k < n_check; ++k) {
    Mat2 s = Mat2::Zero();
    for (const auto& a : acc) s += a[static_cast<std::size_t>(k)];
    s /= static_cast<double>(total);
    const Mat2& t = target[static_cast<std::size_t>(k)];
    double rel = (s - t).norm() / t.norm();
    worst = std::max(worst, rel);
    modes.push_back({{"k", k},
                     {"empirical", {s(0, 0), s(0, 1), s(1, 1)}},
                     {"target", {t(0, 0), t(0, 1), t(1, 1)}},
                     {"relative_error", rel}});
  }
  r.passed = worst <= 0.05;
  r.data = {{"paths", paths}, {"samples_per_path", total / paths}, {"dt", dt}, {"modes", modes}};
  const Mat2& t0 = target[0];
  r.summary = "max relative Frobenius error over 8 modes " + fmt("%.4f", worst) + " (tol 0.05); mode-0 target [" +
              fmt("%.6g", t0(0, 0)) + ", " + fmt("%.6g", t0(0, 1)) + ", " + fmt("%.6g", t0(1, 1)) + "]";
  return r;
}

inline CriterionResult pathwise_contraction(const AcceptanceOptions& opt) {
  CriterionResult r{6, "pathwise contraction", false, "", json::object(), 0};
  Model model(ModelParams{});
  NoiseSpec noise = NoiseSpec::power_law(model.n_modes());
  TrajectoryConfig cfg;
  cfg.T = 10.0;
  cfg.dt = 1e-3;
  cfg.record_every = 10;
  cfg.master_seed = opt.seed + 6;
  StateH x = model.zero_state();
  StateH dir = model.zero_state();
  dir.u(0) = 1.0;
  dir.u(1) = 0.5;
  dir.w(0) = 0.5;
  dir.w(2) = 0.3;
  StateH x_bar = x + with_norm_H(dir, 1.0, model.gamma());
  cfg.x0 = x;
  const int paths = opt.quick ? 8 : 32;
  auto rep = coupled_run(x, x_bar, cfg, model, noise, paths, opt.workers);
  const double two_omega = 2 * rep.omega;
  r.passed = rep.max_envelope_ratio <= 1.05 && rep.min_rate >= 0.8 * two_omega && rep.min_r2 >= 0.95;
  r.data = {{"paths", paths},
            {"omega", rep.omega},
            {"max_envelope_ratio", rep.max_envelope_ratio},
            {"min_rate", rep.min_rate},
            {"min_r2", rep.min_r2},
            {"terminal_distance_sq_path0", rep.distance_sq[0].back()}};
  r.summary = "max |D(t)|^2/(e^{-2wt}|D0|^2) " + fmt("%.4f", rep.max_envelope_ratio) + " (<= 1.05), min rate " +
              fmt("%.3f", rep.min_rate) + " (>= " + fmt("%.3f", 0.8 * two_omega) + "), min R^2 " +
              fmt("%.4f", rep.min_r2) + " (>= 0.95)";
  return r;
}

inline CriterionResult eps_convergence(const AcceptanceOptions& opt) {
  CriterionResult r{7, "eps-convergence", false, "", json::object(), 0};
  Model model(ModelParams{});
  NoiseSpec noise = NoiseSpec::power_law(model.n_modes());
  TrajectoryConfig cfg;
  cfg.T = 1.0;
  cfg.dt = 1e-3;
  cfg.x0 = constant_state(model, 1.2, 0.0);
  cfg.master_seed = opt.seed + 7;
  const int paths = opt.quick ? 16 : 64;
  auto rep = eps_convergence_study({0.2, 0.1, 0.05, 0.025}, cfg, model, noise, paths, opt.workers);
  json rows = json::array();
  for (const auto& row : rep.rows) rows.push_back({{"eps", row.eps}, {"D", row.distance}, {"se", row.se}});
  r.passed = rep.slope_fit.slope >= 0.9;
  r.data = {{"paths", paths}, {"rows", rows}, {"slope", rep.slope_fit.slope}, {"r2", rep.slope_fit.r2},
            {"monotone", rep.monotone}};
  r.summary = "log-log slope of E sup|X_eps - X_eps/2|^2 " + fmt("%.3f", rep.slope_fit.slope) + " (>= 0.9), R^2 " +
              fmt("%.4f", rep.slope_fit.r2);
  return r;
}

inline CriterionResult moment_bound(const AcceptanceOptions& opt) {
  CriterionResult r{8, "moment bound", false, "", json::object(), 0};
  Model model(ModelParams{});
  NoiseSpec noise = NoiseSpec::power_law(model.n_modes());
  TrajectoryConfig cfg;
  cfg.T = 50.0;
  cfg.dt = 1e-3;
  cfg.record_every = 500;
  cfg.x0 = model.zero_state();
  const int paths = opt.quick ? 32 : 128;
  cfg.master_seed = opt.seed + 81;
  auto a = estimate_moments(cfg, model, noise, paths, opt.workers);
  cfg.master_seed = opt.seed + 82;
  auto b = estimate_moments(cfg, model, noise, paths, opt.workers);
  // Pooled curves for the flatness check.
  double worst_ratio = 0, worst_flat = 0;
  json per_m = json::array();
  for (int m = 0; m < 2; ++m) {
    double ratio = std::abs(a.envelope_c[m] / b.envelope_c[m] - 1.0);
    std::vector<double> tx, y;
    for (std::size_t i = 0; i < a.times.size(); ++i) {
      if (a.times[i] >= 0.5 * cfg.T) {
        tx.push_back(a.times[i]);
        y.push_back(0.5 * (a.mean[m][i] + b.mean[m][i]));
      }
    }
    auto fit = ols(tx, y);
    double level = mean_se(y).mean;
    double flat = std::abs(fit.slope) * 0.5 * cfg.T / level;
    double slope_rel_se = fit.slope_se * 0.5 * cfg.T / level;
    worst_ratio = std::max(worst_ratio, ratio);
    worst_flat = std::max(worst_flat, flat);
    per_m.push_back({{"m", m + 1},
                     {"C_batch_a", a.envelope_c[m]},
                     {"C_batch_b", b.envelope_c[m]},
                     {"relative_difference", ratio},
                     {"late_level", level},
                     {"flatness", flat},
                     {"flatness_se", slope_rel_se}});
  }
  r.passed = worst_ratio <= 0.2 && worst_flat < 0.05;
  r.data = {{"paths_per_batch", paths}, {"T", cfg.T}, {"moments", per_m}};
  r.summary = "C_m batch mismatch " + fmt("%.3f", worst_ratio) + " (<= 0.20), flatness drift " + fmt("%.3f", worst_flat) +
              " (< 0.05), C_1 = " + fmt("%.4g", a.envelope_c[0]) + ", C_2 = " + fmt("%.4g", a.envelope_c[1]);
  return r;
}

/// Two ensembles from x0 = 0 and |x0|_H = 5 under independent noise, shared by
/// the uniqueness and semigroup-limit criteria.
struct TwoStartEnsembles {
  std::vector<StateH> at_40[2];
  std::vector<StateH> at_end[2];
  double x_distance = 0;
  double horizon = 0;
};

inline TwoStartEnsembles two_start_ensembles(const AcceptanceOptions& opt, const Model& model, const NoiseSpec& noise) {
  TwoStartEnsembles e;
  const int paths = opt.quick ? 32 : 128;
  e.horizon = 5.0 / model.constants().omega;
  StateH far = model.zero_state();
  far.u(0) = 1.0;
  far.w(0) = 1.0;
  far.u(1) = 0.5;
  far = with_norm_H(far, 5.0, model.gamma());
  const StateH starts[2] = {model.zero_state(), far};
  e.x_distance = std::sqrt(norm_H_sq(starts[1] - starts[0], model));
  for (int s = 0; s < 2; ++s) {
    TrajectoryConfig cfg;
    cfg.T = e.horizon;
    cfg.dt = 1e-3;
    cfg.record_every = 40000;
    cfg.keep_snapshots = true;
    cfg.x0 = starts[s];
    cfg.master_seed = opt.seed + 90 + static_cast<std::uint64_t>(s);
    auto recs = integrate_ensemble(cfg, model, noise, paths, opt.workers);
    for (auto& rec : recs) {
      e.at_40[s].push_back(rec.snapshots.at(1));
      e.at_end[s].push_back(rec.terminal);
    }
  }
  return e;
}

inline CriterionResult invariant_measure(const AcceptanceOptions& opt, const TwoStartEnsembles& ens, const Model& model,
                                         const NoiseSpec& noise) {
  CriterionResult r{9, "invariant-measure construction", false, "", json::object(), 0};
  TrajectoryConfig cfg;
  cfg.dt = 1e-3;
  cfg.master_seed = opt.seed + 9;
  const int paths = opt.quick ? 16 : 64;
  auto rep = backward_run({5, 10, 20, 40}, model.zero_state(), cfg, model, noise, paths, opt.workers);
  std::vector<double> a, b;
  for (const auto& s : ens.at_end[0]) a.push_back(std::sqrt(norm_H_sq(s, model)));
  for (const auto& s : ens.at_end[1]) b.push_back(std::sqrt(norm_H_sq(s, model)));
  auto ks = ks_two_sample(a, b);
  json pairs = json::array();
  for (const auto& p : rep.pairs) {
    pairs.push_back({{"gamma", p.gamma}, {"lambda", p.lambda}, {"distance", p.distance}, {"se", p.se}});
  }
  const bool decay = rep.rate > 0 && rep.consecutive_fit.r2 >= 0.9;
  r.passed = decay && !ks.reject;
  r.data = {{"paths", paths},
            {"pairs", pairs},
            {"rate", rep.rate},
            {"r2", rep.consecutive_fit.r2},
            {"second_moment", rep.second_moment},
            {"ks_statistic", ks.statistic},
            {"ks_critical", ks.critical},
            {"ks_p_value", ks.p_value},
            {"ks_horizon", ens.horizon},
            {"coupling_consistent", ks.reject || rep.rate > 0}};
  r.summary = "backward Cauchy rate " + fmt("%.3f", rep.rate) + " (> 0), R^2 " + fmt("%.4f", rep.consecutive_fit.r2) +
              " (>= 0.9); two-start KS " + fmt("%.4f", ks.statistic) + " vs critical " + fmt("%.4f", ks.critical);
  return r;
}

inline CriterionResult semigroup_limit(const AcceptanceOptions&, const TwoStartEnsembles& ens, const Model& model) {
  CriterionResult r{10, "semigroup limit", false, "", json::object(), 0};
  StateH h1 = model.zero_state();
  h1.u(0) = 10.0;
  StateH h2 = model.zero_state();
  h2.u(1) = 5.0;
  h2.w(0) = 5.0;
  const std::vector<Functional> fns{cylinder_cos(h1, model, "cos<x,h1>"), cylinder_cos(h2, model, "cos<x,h2>"),
                                    norm_ramp(0.2, model)};
  bool ok = true;
  json rows = json::array();
  std::string parts;
  for (const auto& fn : fns) {
    auto p1 = transition_semigroup(fn, ens.at_40[0]);
    auto p2 = transition_semigroup(fn, ens.at_40[1]);
    double diff = std::abs(p1.mean - p2.mean);
    double se = std::hypot(p1.se, p2.se);
    bool pass = diff <= 3 * se;
    ok &= pass;
    rows.push_back({{"functional", fn.name}, {"P_t_phi_x1", p1.mean}, {"P_t_phi_x2", p2.mean}, {"diff", diff},
                    {"combined_se", se}, {"pass", pass}});
    parts += (parts.empty() ? "" : "; ") + fn.name + " " + fmt("%.2f", se > 0 ? diff / se : 0.0) + " SE";
  }
  r.passed = ok;
  r.data = {{"t", 40.0}, {"x_distance", ens.x_distance}, {"functionals", rows}};
  r.summary = "|P_40 phi(x1) - P_40 phi(x2)| in combined SE: " + parts + " (<= 3 each)";
  return r;
}

inline CriterionResult dynkin_identity(const AcceptanceOptions& opt) {
  CriterionResult r{11, "Dynkin identity", false, "", json::object(), 0};
  Model model(ModelParams{});
  NoiseSpec noise = NoiseSpec::power_law(model.n_modes());
  const int paths = opt.quick ? 64 : 256;

  CylinderFunction phi_ou(model, noise, {{0, 1.0}}, {});
  StateH x_ou = cosine_state(model, 0, 0.5, 0.1);
  TrajectoryConfig ou;
  ou.dt = 1e-3;
  ou.linear = true;
  ou.master_seed = opt.seed + 111;
  ou.x0 = x_ou;
  auto r_ou = dynkin_residual(phi_ou, x_ou, 1.0, paths, ou, model, noise, opt.workers);
  bool ou_ok = std::abs(r_ou.residual) <= 3 * r_ou.residual_se &&
               std::abs(r_ou.terminal.mean - r_ou.exact) <= 3 * r_ou.terminal.se;

  CylinderFunction phi(model, noise, {{0, 0.5}, {1, 0.5}}, {});
  StateH x = model.zero_state();
  x.u(0) = 0.5;
  x.u(1) = 0.3;
  x.w(0) = 0.1;
  TrajectoryConfig cub;
  cub.noise_dt = 5e-4;
  cub.master_seed = opt.seed + 112;
  cub.x0 = x;
  cub.dt = 1e-3;
  auto r1 = dynkin_residual(phi, x, 1.0, paths, cub, model, noise, opt.workers);
  cub.dt = 5e-4;
  auto r2 = dynkin_residual(phi, x, 1.0, paths, cub, model, noise, opt.workers);
  bool raw_ok = std::abs(r1.residual) <= 3 * r1.residual_se && std::abs(r2.residual) <= 3 * r2.residual_se;
  bool reduces = std::abs(r2.cv_residual) < std::abs(r1.cv_residual);
  double richardson = 2 * r2.cv_residual - r1.cv_residual;
  double richardson_se = std::hypot(2 * r2.cv_residual_se, r1.cv_residual_se);
  r.passed = ou_ok && raw_ok && reduces;
  auto pack = [](const DynkinReport& d) {
    return json{{"dt", d.dt},
                {"residual", d.residual},
                {"se", d.residual_se},
                {"bias_residual", d.cv_residual},
                {"bias_se", d.cv_residual_se},
                {"rejected", d.rejected}};
  };
  json ou_j = pack(r_ou);
  ou_j["terminal_mean"] = r_ou.terminal.mean;
  ou_j["exact"] = r_ou.exact;
  r.data = {{"paths", paths}, {"ou", ou_j}, {"cubic", {pack(r1), pack(r2)}},
            {"richardson", richardson}, {"richardson_se", richardson_se}};
  r.summary = "OU residual " + fmt("%.2e", r_ou.residual) + " (SE " + fmt("%.1e", r_ou.residual_se) + "), cubic " +
              fmt("%.2e", r1.residual) + "/" + fmt("%.2e", r2.residual) + " (SE " + fmt("%.1e", r1.residual_se) +
              "/" + fmt("%.1e", r2.residual_se) + "), bias " + fmt("%.2e", r1.cv_residual) + " -> " +
              fmt("%.2e", r2.cv_residual) + " as dt halves";
  return r;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Small configuration that exercises every experiment subcommand quickly.
inline ExperimentConfig reproducibility_config(std::uint64_t seed) {
  ExperimentConfig cfg = parse_config_text(R"({
    "model": {"n_modes": 8, "n_grid": 16},
    "run": {"T": 0.5, "dt": 0.001, "record_every": 50, "x0": {"kind": "cosine", "mode": 1, "u": 0.4, "w": 0.1}},
    "simulate": {"paths": 3},
    "couple": {"paths": 3},
    "convergence": {"eps": [0.1, 0.05], "paths": 3},
    "moments": {"paths": 4},
    "invariant": {"burn_in": 100, "spacing": 5, "samples": 10, "ensemble": 4},
    "dynkin": {"paths": 4, "t": 0.2}
  })");
  cfg.master_seed = seed;
  return cfg;
}

inline CriterionResult reproducibility(const AcceptanceOptions& opt) {
  CriterionResult r{12, "reproducibility", false, "", json::object(), 0};
  ExperimentConfig cfg = reproducibility_config(opt.seed + 12);
  namespace fs = std::filesystem;
  const fs::path root = opt.scratch / ("fhn_repro_" + std::to_string(opt.seed));
  fs::remove_all(root);
  const unsigned counts[3] = {1, 3, 1};
  std::vector<std::string> mismatches;
  int files = 0;
  for (const auto& name : command_names()) {
    if (name == "acceptance") continue;
    fs::path dirs[3];
    for (int run = 0; run < 3; ++run) {
      CommandOptions co;
      co.out_dir = root / (name + "_" + std::to_string(run));
      co.workers = counts[run];
      run_experiment(name, cfg, co);
      dirs[run] = co.out_dir;
    }
    std::vector<fs::path> listing;
    for (const auto& entry : fs::directory_iterator(dirs[0])) listing.push_back(entry.path().filename());
    std::sort(listing.begin(), listing.end());
    for (int run = 1; run < 3; ++run) {
      std::size_t other = std::distance(fs::directory_iterator(dirs[run]), fs::directory_iterator{});
      if (other != listing.size()) mismatches.push_back(name + ": file count differs");
    }
    for (const auto& f : listing) {
      ++files;
      std::string ref = read_file(dirs[0] / f);
      for (int run = 1; run < 3; ++run) {
        if (read_file(dirs[run] / f) != ref) mismatches.push_back(name + "/" + f.string());
      }
    }
  }
  fs::remove_all(root);
  r.passed = mismatches.empty() && files > 0;
  r.data = {{"files_compared", files}, {"worker_counts", {1, 3, 1}}, {"mismatches", mismatches}};
  r.summary = std::to_string(files) + " output files from 8 subcommands compared across worker counts 1/3 and reruns; " +
              std::to_string(mismatches.size()) + " mismatches";
  return r;
}

}  // namespace acceptance

/// Runs all criteria in order; `report` is called as each one finishes.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                                   const std::function<void(const CriterionResult&)>& report = {}) {
  std::vector<CriterionResult> out;
  auto timed = [&](int id, const char* name, auto&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{id, name, false, "", json::object(), 0};
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = CriterionResult{id, name, false, std::string("error: ") + e.what(), json::object(), 0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(r);
    if (report) report(out.back());
  };
  using namespace acceptance;
  timed(1, "drift identities", [&] { return drift_identities(opt); });
  timed(2, "monotonicity", [&] { return monotonicity(opt); });
  timed(3, "operator dissipativity", [&] { return dissipativity(opt); });
  timed(4, "trace diagnostics", [&] { return trace_diagnostics(opt); });
  timed(5, "linear-case Gaussian oracle", [&] { return linear_gaussian_oracle(opt); });
  timed(6, "pathwise contraction", [&] { return pathwise_contraction(opt); });
  timed(7, "eps-convergence", [&] { return eps_convergence(opt); });
  timed(8, "moment bound", [&] { return moment_bound(opt); });
  Model model(ModelParams{});
  NoiseSpec noise = NoiseSpec::power_law(model.n_modes());
  std::optional<TwoStartEnsembles> ens;
  std::string ens_error;
  try {
    ens = two_start_ensembles(opt, model, noise);
  } catch (const std::exception& e) {
    ens_error = e.what();
  }
  auto need_ens = [&]() -> const TwoStartEnsembles& {
    if (!ens) throw std::runtime_error("two-start ensembles failed: " + ens_error);
    return *ens;
  };
  timed(9, "invariant-measure construction", [&] {
    auto r = invariant_measure(opt, need_ens(), model, noise);
    return r;
  });
  timed(10, "semigroup limit", [&] { return semigroup_limit(opt, need_ens(), model); });
  timed(11, "Dynkin identity", [&] { return dynkin_identity(opt); });
  timed(12, "reproducibility", [&] { return reproducibility(opt); });
  return out;
}

inline json acceptance_to_json(const std::vector<CriterionResult>& results, const AcceptanceOptions& opt) {
  json j;
  j["schema_version"] = schema_version;
  j["version"] = version_string;
  j["command"] = "acceptance";
  j["master_seed"] = opt.seed;
  j["quick"] = opt.quick;
  json arr = json::array();
  bool all = true;
  for (const auto& r : results) {
    all &= r.passed;
    arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.passed}, {"summary", r.summary}, {"data", r.data}});
  }
  j["criteria"] = arr;
  j["all_pass"] = all;
  return j;
}

}  // namespace fhn

#endif  // FHN_ACCEPTANCE_HPP
