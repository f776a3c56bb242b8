#ifndef FHN_COMMANDS_HPP
#define FHN_COMMANDS_HPP

// Experiment drivers behind the command-line subcommands. Each writes CSV
// files and a summary.json into the output directory. Outputs depend only on
// the configuration and seed, never on the worker count.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fhn/ergodics.hpp"
#include "fhn/errors.hpp"
#include "fhn/io.hpp"
#include "fhn/kolmogorov.hpp"
#include "fhn/model.hpp"
#include "fhn/noise.hpp"
#include "fhn/solver.hpp"

namespace fhn {

struct CommandOptions {
  std::filesystem::path out_dir = "fhn_out";
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  bool quick = false;
  unsigned workers = default_workers();
  // dynkin overrides
  std::optional<std::vector<int>> h_modes;
  std::optional<double> t;
  std::optional<double> dt;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"eigen",   "simulate",  "couple",        "convergence", "moments",
                                              "invariant", "linear-oracle", "dynkin",  "acceptance"};
  return names;
}

namespace detail {

inline json summary_header(const std::string& command, const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = schema_version;
  j["version"] = version_string;
  j["command"] = command;
  j["master_seed"] = cfg.master_seed;
  j["config"] = to_json(cfg);
  return j;
}

inline TrajectoryConfig run_config(const ExperimentConfig& cfg, const Model& model) {
  TrajectoryConfig r = cfg.run;
  r.x0 = build_initial(cfg.x0, model);
  r.master_seed = cfg.master_seed;
  r.path_id = 0;
  validate(r, model);
  return r;
}

inline json state_to_json(const StateH& x) {
  return json{{"u", std::vector<double>(x.u.data(), x.u.data() + x.u.size())},
              {"w", std::vector<double>(x.w.data(), x.w.data() + x.w.size())}};
}

inline std::string indexed_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.%s", stem, i, ext);
  return buf;
}

}  // namespace detail

inline void command_eigen(const ExperimentConfig& cfg, const CommandOptions& opt) {
  Model model(cfg.model);
  const auto& b = model.basis();
  std::vector<std::string> header{"xi"};
  for (int k = 0; k < b.n_modes(); ++k) header.push_back("e_" + std::to_string(k));
  CsvWriter basis(opt.out_dir / "eigenbasis.csv", header);
  for (int j = 0; j < b.n_grid(); ++j) {
    std::vector<double> row{b.grid[static_cast<std::size_t>(j)]};
    for (int k = 0; k < b.n_modes(); ++k) row.push_back(b.modes(j, k));
    basis.row(row);
  }
  CsvWriter eig(opt.out_dir / "eigenvalues.csv", {"k", "mu"});
  for (int k = 0; k < b.n_modes(); ++k) eig.row({static_cast<double>(k), b.mu(k)});
  json s = detail::summary_header("eigen", cfg);
  s["analytic"] = b.analytic;
  s["sup_bound"] = b.sup_bound;
  s["mu"] = std::vector<double>(b.mu.data(), b.mu.data() + b.mu.size());
  const auto& d = model.constants();
  s["constants"] = {{"eta", d.eta},       {"xi0", d.xi0},         {"c_min", d.c_min},  {"p_min", d.p_min},
                    {"omega", d.omega},   {"omega1", d.omega1},   {"omega2", d.omega2}};
  write_json(opt.out_dir / "summary.json", s);
}

inline void command_simulate(const ExperimentConfig& cfg, const CommandOptions& opt) {
  Model model(cfg.model);
  NoiseSpec noise = cfg.noise_spec();
  TrajectoryConfig run = detail::run_config(cfg, model);
  const int paths = cfg.simulate.paths;
  require(paths >= 1, "simulate: paths must be >= 1");
  auto recs = integrate_ensemble(run, model, noise, paths, opt.workers);
  json s = detail::summary_header("simulate", cfg);
  json per_path = json::array();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CsvWriter w(opt.out_dir / detail::indexed_name("path", i, "csv"), {"t", "h_norm_sq", "v_norm_sq"});
    for (std::size_t k = 0; k < recs[i].times.size(); ++k) {
      w.row({recs[i].times[k], recs[i].h_norm_sq[k], recs[i].v_norm_sq[k]});
    }
    per_path.push_back({{"path_id", i},
                        {"terminal_h_norm_sq", recs[i].h_norm_sq.back()},
                        {"terminal_v_norm_sq", recs[i].v_norm_sq.back()},
                        {"stability_substeps", recs[i].substeps},
                        {"terminal", detail::state_to_json(recs[i].terminal)}});
  }
  s["paths"] = per_path;
  write_json(opt.out_dir / "summary.json", s);
}

inline void command_couple(const ExperimentConfig& cfg, const CommandOptions& opt) {
  Model model(cfg.model);
  NoiseSpec noise = cfg.noise_spec();
  TrajectoryConfig run = detail::run_config(cfg, model);
  const int paths = cfg.couple.paths;
  require(paths >= 1, "couple: paths must be >= 1");
  StateH x = run.x0;
  StateH x_bar = x;
  if (cfg.couple.has_x_bar) {
    x_bar = build_initial(cfg.couple.x_bar, model);
  } else {
    require(cfg.couple.distance >= 0, "couple.distance must be >= 0");
    x_bar.u(0) += cfg.couple.distance / std::sqrt(model.gamma());
  }
  auto rep = coupled_run(x, x_bar, run, model, noise, paths, opt.workers);
  CsvWriter w(opt.out_dir / "couple.csv", {"t", "mean_distance_sq", "max_distance_sq", "envelope"});
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    double sum = 0, mx = 0;
    for (const auto& d : rep.distance_sq) {
      sum += d[i];
      mx = std::max(mx, d[i]);
    }
    w.row({rep.times[i], sum / static_cast<double>(rep.distance_sq.size()), mx,
           std::exp(-2 * rep.omega * rep.times[i]) * rep.initial_sq});
  }
  json s = detail::summary_header("couple", cfg);
  s["omega"] = rep.omega;
  s["initial_distance_sq"] = rep.initial_sq;
  s["max_envelope_ratio"] = rep.max_envelope_ratio;
  s["min_rate"] = finite_or_null(rep.min_rate);
  s["min_r2"] = finite_or_null(rep.min_r2);
  s["rates"] = rep.rates;
  s["pass"] = {{"envelope", rep.max_envelope_ratio <= 1.05},
               {"rate", rep.min_rate >= 0.8 * 2 * rep.omega},
               {"r2", rep.min_r2 >= 0.95}};
  write_json(opt.out_dir / "summary.json", s);
}

inline void command_convergence(const ExperimentConfig& cfg, const CommandOptions& opt) {
  Model model(cfg.model);
  NoiseSpec noise = cfg.noise_spec();
  TrajectoryConfig run = detail::run_config(cfg, model);
  const int paths = cfg.convergence.paths;
  require(paths >= 2, "convergence: paths must be >= 2");
  auto rep = eps_convergence_study(cfg.convergence.eps, run, model, noise, paths, opt.workers);
  CsvWriter w(opt.out_dir / "convergence.csv", {"eps", "lambda", "sup_distance_sq", "se"});
  for (const auto& r : rep.rows) w.row({r.eps, r.lambda, r.distance, r.se});
  CsvWriter f(opt.out_dir / "f_eps_integral.csv", {"eps", "mean", "se"});
  for (std::size_t i = 0; i < rep.eps_values.size(); ++i) {
    f.row({rep.eps_values[i], rep.f_eps_integral[i], rep.f_eps_integral_se[i]});
  }
  json s = detail::summary_header("convergence", cfg);
  s["slope"] = rep.slope_fit.slope;
  s["slope_r2"] = rep.slope_fit.r2;
  s["monotone"] = rep.monotone;
  s["pass"] = {{"slope", rep.slope_fit.slope >= 0.9}};
  write_json(opt.out_dir / "summary.json", s);
}

inline void command_moments(const ExperimentConfig& cfg, const CommandOptions& opt) {
  Model model(cfg.model);
  NoiseSpec noise = cfg.noise_spec();
  TrajectoryConfig run = detail::run_config(cfg, model);
  const int paths = cfg.moments.paths;
  require(paths >= 2, "moments: paths must be >= 2");
  auto rep = estimate_moments(run, model, noise, paths, opt.workers);
  CsvWriter w(opt.out_dir / "moments.csv", {"t", "m1", "m1_se", "m2", "m2_se"});
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    w.row({rep.times[i], rep.mean[0][i], rep.se[0][i], rep.mean[1][i], rep.se[1][i]});
  }
  json s = detail::summary_header("moments", cfg);
  s["omega1"] = rep.omega1;
  s["envelope_c"] = {rep.envelope_c[0], rep.envelope_c[1]};
  s["flatness"] = {rep.flatness[0], rep.flatness[1]};
  write_json(opt.out_dir / "summary.json", s);
}

inline void command_invariant(const ExperimentConfig& cfg, const CommandOptions& opt) {
  Model model(cfg.model);
  NoiseSpec noise = cfg.noise_spec();
  TrajectoryConfig run = detail::run_config(cfg, model);
  InvariantMeasureConfig im;
  im.burn_in = cfg.invariant.burn_in;
  im.spacing = cfg.invariant.spacing;
  im.n_time_samples = cfg.invariant.samples;
  im.n_ensemble = cfg.invariant.ensemble;
  StateH h = model.zero_state();
  h.u(0) = 1.0;
  std::vector<Functional> fns{norm_H_functional(model), norm_V_functional(model),
                              projection_functional(h, model, "projection_u0")};
  auto em = estimate_invariant_measure(run, im, fns, model, noise, opt.workers);
  json s = detail::summary_header("invariant", cfg);
  json tests = json::array();
  for (const auto& fs : em.functionals) {
    CsvWriter w(opt.out_dir / ("histogram_" + fs.name + ".csv"), {"source", "bin_lo", "bin_hi", "mass"});
    for (int src = 0; src < 2; ++src) {
      const auto& hist = src == 0 ? fs.time_histogram : fs.ensemble_histogram;
      for (std::size_t i = 0; i < hist.mass.size(); ++i) {
        w.row({static_cast<double>(src), hist.edge(i), hist.edge(i + 1), hist.mass[i]});
      }
    }
    tests.push_back({{"functional", fs.name},
                     {"ks_statistic", fs.ks.statistic},
                     {"ks_critical", fs.ks.critical},
                     {"p_value", fs.ks.p_value},
                     {"agree", !fs.ks.reject}});
  }
  s["time_vs_ensemble"] = tests;
  s["sample_count"] = em.sample_count;
  json moments = json::array();
  for (int m = 1; m <= 2; ++m) {
    auto mi = invariant_moment_integral(m, em.time_states, model);
    moments.push_back({{"m", m},
                       {"norm_moment", mi.norm_moment.mean},
                       {"norm_moment_se", mi.norm_moment.se},
                       {"f_eta_moment", mi.f_eta_moment.mean},
                       {"f_eta_moment_se", mi.f_eta_moment.se}});
  }
  s["moment_integrals"] = moments;
  if (run.linear && model.constant_p()) {
    double var = linear_projection_variance(h, model, noise);
    std::vector<double> proj;
    for (const auto& st : em.time_states) proj.push_back(inner_product_H(st, h, model));
    auto ks = ks_normal(proj, 0.0, std::sqrt(var));
    s["gaussian_oracle"] = {{"variance", var},
                            {"second_moment", linear_stationary_second_moment(model, noise)},
                            {"ks_statistic", ks.statistic},
                            {"ks_critical", ks.critical},
                            {"agree", !ks.reject}};
  }
  write_json(opt.out_dir / "summary.json", s);
}

inline void command_linear_oracle(const ExperimentConfig& cfg, const CommandOptions& opt) {
  Model model(cfg.model);
  NoiseSpec noise = cfg.noise_spec();
  auto cov = linear_invariant_covariance(model, noise);
  CsvWriter w(opt.out_dir / "linear_covariance.csv", {"k", "s_uu", "s_uw", "s_ww", "residual"});
  double worst = 0;
  for (int k = 0; k < model.n_modes(); ++k) {
    const auto& s = cov[static_cast<std::size_t>(k)];
    double res = lyapunov_residual(shifted_mode_matrix(k, model), s, mode_noise(noise, k));
    worst = std::max(worst, res);
    w.row({static_cast<double>(k), s(0, 0), s(0, 1), s(1, 1), res});
  }
  json s = detail::summary_header("linear-oracle", cfg);
  s["stationary_second_moment"] = linear_stationary_second_moment(model, noise);
  s["trace_Q"] = trace_Q(noise);
  s["trace_bound"] = convolution_trace_bound(model, noise);
  s["max_residual"] = worst;
  write_json(opt.out_dir / "summary.json", s);
}

inline void command_dynkin(const ExperimentConfig& cfg, const CommandOptions& opt) {
  Model model(cfg.model);
  NoiseSpec noise = cfg.noise_spec();
  const DynkinBlock& d = cfg.dynkin;
  require(d.paths >= 2, "dynkin: paths must be >= 2");
  require(!d.h_modes.empty(), "dynkin: h_modes must be nonempty");
  CylinderFunction::Terms terms;
  for (int k : d.h_modes) terms.emplace_back(k, d.coefficient);
  CylinderFunction phi(model, noise, terms, {});
  TrajectoryConfig run = cfg.run;
  run.dt = d.dt;
  run.noise_dt = 0;
  run.start_time = 0;
  run.linear = d.linear;
  run.master_seed = cfg.master_seed;
  run.x0 = model.zero_state();
  StateH x = build_initial(d.x0, model);
  auto rep = dynkin_residual(phi, x, d.t, d.paths, run, model, noise, opt.workers);
  json s = detail::summary_header("dynkin", cfg);
  s["phi0"] = rep.phi0;
  s["terminal_mean"] = rep.terminal.mean;
  s["terminal_se"] = rep.terminal.se;
  s["integral_mean"] = rep.integral.mean;
  s["residual"] = rep.residual;
  s["se"] = rep.residual_se;
  s["cv_residual"] = rep.cv_residual;
  s["cv_se"] = rep.cv_residual_se;
  s["rejected_paths"] = rep.rejected;
  s["exact_ou_expectation"] = finite_or_null(rep.exact);
  s["pass"] = {{"within_3se", std::abs(rep.residual) <= 3 * rep.residual_se}};
  write_json(opt.out_dir / "summary.json", s);
}

/// Runs one of the experiment subcommands (everything except acceptance).
inline void run_experiment(const std::string& name, const ExperimentConfig& cfg_in, const CommandOptions& opt) {
  ExperimentConfig cfg = cfg_in;
  if (opt.seed) cfg.master_seed = *opt.seed;
  if (opt.paths) {
    const int p = *opt.paths;
    if (name == "simulate") cfg.simulate.paths = p;
    if (name == "couple") cfg.couple.paths = p;
    if (name == "convergence") cfg.convergence.paths = p;
    if (name == "moments") cfg.moments.paths = p;
    if (name == "invariant") cfg.invariant.ensemble = p;
    if (name == "dynkin") cfg.dynkin.paths = p;
  }
  if (opt.h_modes) cfg.dynkin.h_modes = *opt.h_modes;
  if (opt.t) cfg.dynkin.t = *opt.t;
  if (opt.dt) cfg.dynkin.dt = *opt.dt;
  std::filesystem::create_directories(opt.out_dir);
  if (name == "eigen") {
    command_eigen(cfg, opt);
  } else if (name == "simulate") {
    command_simulate(cfg, opt);
  } else if (name == "couple") {
    command_couple(cfg, opt);
  } else if (name == "convergence") {
    command_convergence(cfg, opt);
  } else if (name == "moments") {
    command_moments(cfg, opt);
  } else if (name == "invariant") {
    command_invariant(cfg, opt);
  } else if (name == "linear-oracle") {
    command_linear_oracle(cfg, opt);
  } else if (name == "dynkin") {
    command_dynkin(cfg, opt);
  } else {
    throw ConfigError("unknown subcommand '" + name + "'");
  }
}

}  // namespace fhn

#endif  // FHN_COMMANDS_HPP
