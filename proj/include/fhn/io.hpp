#ifndef FHN_IO_HPP
#define FHN_IO_HPP

// JSON experiment configuration (strict: unknown keys are errors) and
// deterministic CSV output.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fhn/errors.hpp"
#include "fhn/model.hpp"
#include "fhn/noise.hpp"
#include "fhn/solver.hpp"

namespace fhn {

using json = nlohmann::ordered_json;

inline constexpr const char* version_string = "0.1.0";
inline constexpr int schema_version = 1;

// ---------------------------------------------------------------------------
// Typed configuration

struct InitialCondition {
  std::string kind = "zero";  // zero | constant | cosine | grid
  double u = 0;
  double w = 0;
  int mode = 0;
  std::vector<double> u_grid;
  std::vector<double> w_grid;
  double norm = -1;  // if >= 0, rescale to this H-norm
};

struct SimulateBlock {
  int paths = 1;
};

struct CoupleBlock {
  int paths = 32;
  double distance = 1.0;  // |x - x_bar|_H when x_bar is not given
  bool has_x_bar = false;
  InitialCondition x_bar;
};

struct ConvergenceBlock {
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  int paths = 64;
};

struct MomentsBlock {
  int paths = 128;
};

struct InvariantBlock {
  double burn_in = 100.0;
  double spacing = 5.0;
  int samples = 200;
  int ensemble = 128;
};

struct DynkinBlock {
  std::vector<int> h_modes{0, 1};
  double coefficient = 0.5;  // h = coefficient * sum over h_modes of (e_k, 0)
  double t = 1.0;
  int paths = 256;
  double dt = 1e-3;
  bool linear = false;
  InitialCondition x0{"cosine", 0.5, 0.1, 0, {}, {}, -1};
};

struct ExperimentConfig {
  ModelParams model;
  bool noise_power_law = true;
  double sigma2 = 0.01;
  double s = 1.0;
  std::vector<double> lambda1, lambda2;
  TrajectoryConfig run;
  InitialCondition x0;
  std::uint64_t master_seed = 0;
  SimulateBlock simulate;
  CoupleBlock couple;
  ConvergenceBlock convergence;
  MomentsBlock moments;
  InvariantBlock invariant;
  DynkinBlock dynkin;

  NoiseSpec noise_spec() const {
    NoiseSpec spec = noise_power_law ? NoiseSpec::power_law(model.n_modes, sigma2, s)
                                     : NoiseSpec::from_tables(lambda1, lambda2);
    validate(spec, model.n_modes);
    return spec;
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok |= it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + where + "." + it.key() + "'");
  }
}

inline double get_number(const json& j, const char* key, const std::string& where, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError("field " + where + "." + key + ": expected a number");
  return v.get<double>();
}

inline int get_int(const json& j, const char* key, const std::string& where, int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError("field " + where + "." + key + ": expected an integer");
  return v.get<int>();
}

inline bool get_bool(const json& j, const char* key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError("field " + where + "." + key + ": expected true or false");
  return v.get<bool>();
}

inline std::vector<double> get_numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("field " + where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("field " + where + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline Profile parse_profile(const json& v, const std::string& where) {
  if (v.is_number()) return Profile::constant(v.get<double>());
  if (v.is_array()) {
    auto vals = get_numbers(v, where);
    if (vals.size() < 2) throw ConfigError("field " + where + ": a table needs at least 2 values");
    return Profile::table(std::move(vals));
  }
  if (v.is_object()) {
    check_keys(v, where, {"a", "b"});
    double a = get_number(v, "a", where, 1.0);
    double b = get_number(v, "b", where, 0.0);
    char label[96];
    std::snprintf(label, sizeof label, "affine:%.17g:%.17g", a, b);
    return Profile::function([a, b](double xi) { return a + b * xi; }, label);
  }
  throw ConfigError("field " + where + ": expected a number, an array of grid values or {a, b}");
}

inline json profile_to_json(const Profile& p) {
  switch (p.kind()) {
    case Profile::Kind::constant:
      return p.constant_value();
    case Profile::Kind::table:
      return p.table_values();
    case Profile::Kind::function:
      break;
  }
  double a = 0, b = 0;
  if (std::sscanf(p.label().c_str(), "affine:%lf:%lf", &a, &b) == 2) return json{{"a", a}, {"b", b}};
  return p.label();
}

inline InitialCondition parse_initial(const json& v, const std::string& where) {
  check_keys(v, where, {"kind", "u", "w", "mode", "norm"});
  InitialCondition ic;
  if (v.contains("kind")) {
    if (!v.at("kind").is_string()) throw ConfigError("field " + where + ".kind: expected a string");
    ic.kind = v.at("kind").get<std::string>();
  }
  if (ic.kind != "zero" && ic.kind != "constant" && ic.kind != "cosine" && ic.kind != "grid") {
    throw ConfigError("field " + where + ".kind: expected zero, constant, cosine or grid");
  }
  if (ic.kind == "grid") {
    if (!v.contains("u") || !v.contains("w")) throw ConfigError(where + ": grid data needs arrays u and w");
    ic.u_grid = get_numbers(v.at("u"), where + ".u");
    ic.w_grid = get_numbers(v.at("w"), where + ".w");
  } else {
    ic.u = get_number(v, "u", where, 0.0);
    ic.w = get_number(v, "w", where, 0.0);
  }
  ic.mode = get_int(v, "mode", where, 0);
  ic.norm = get_number(v, "norm", where, -1.0);
  return ic;
}

inline json initial_to_json(const InitialCondition& ic) {
  json j;
  j["kind"] = ic.kind;
  if (ic.kind == "grid") {
    j["u"] = ic.u_grid;
    j["w"] = ic.w_grid;
  } else if (ic.kind != "zero") {
    j["u"] = ic.u;
    j["w"] = ic.w;
  }
  if (ic.kind == "cosine") j["mode"] = ic.mode;
  if (ic.norm >= 0) j["norm"] = ic.norm;
  return j;
}

inline std::vector<int> get_ints(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("field " + where + ": expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError("field " + where + ": expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

}  // namespace detail

inline StateH build_initial(const InitialCondition& ic, const Model& model) {
  StateH x = model.zero_state();
  if (ic.kind == "constant") {
    x = constant_state(model, ic.u, ic.w);
  } else if (ic.kind == "cosine") {
    require(ic.mode >= 0 && ic.mode < model.n_modes(), "x0.mode out of range");
    x = cosine_state(model, ic.mode, ic.u, ic.w);
  } else if (ic.kind == "grid") {
    require(static_cast<int>(ic.u_grid.size()) == model.n_grid() &&
                static_cast<int>(ic.w_grid.size()) == model.n_grid(),
            "x0 grid data must have n_grid values per component");
    x = project_grid(model, Eigen::Map<const Eigen::VectorXd>(ic.u_grid.data(), model.n_grid()),
                     Eigen::Map<const Eigen::VectorXd>(ic.w_grid.data(), model.n_grid()));
  }
  if (ic.norm >= 0) {
    if (ic.norm == 0) return model.zero_state();
    x = with_norm_H(std::move(x), ic.norm, model.gamma());
  }
  return x;
}

/// Parses a configuration document. Missing blocks and keys take defaults.
inline ExperimentConfig parse_config(const json& doc) {
  using namespace detail;
  ExperimentConfig cfg;
  check_keys(doc, "config",
             {"master_seed", "model", "noise", "run", "simulate", "couple", "convergence", "moments", "invariant",
              "dynkin", "eigen", "linear-oracle", "acceptance"});
  if (doc.contains("master_seed")) {
    const auto& v = doc.at("master_seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError("field config.master_seed: expected a nonnegative integer");
    }
    cfg.master_seed = v.get<std::uint64_t>();
  }
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    check_keys(m, "model", {"alpha", "gamma", "xi1", "c", "p", "n_modes", "n_grid"});
    cfg.model.alpha = get_number(m, "alpha", "model", cfg.model.alpha);
    cfg.model.gamma = get_number(m, "gamma", "model", cfg.model.gamma);
    cfg.model.xi1 = get_number(m, "xi1", "model", cfg.model.xi1);
    if (m.contains("c")) cfg.model.c = parse_profile(m.at("c"), "model.c");
    if (m.contains("p")) cfg.model.p = parse_profile(m.at("p"), "model.p");
    cfg.model.n_modes = get_int(m, "n_modes", "model", cfg.model.n_modes);
    cfg.model.n_grid = get_int(m, "n_grid", "model", m.contains("n_modes") ? 2 * cfg.model.n_modes : cfg.model.n_grid);
  }
  if (doc.contains("noise")) {
    const auto& n = doc.at("noise");
    check_keys(n, "noise", {"sigma2", "s", "lambda1", "lambda2"});
    bool tables = n.contains("lambda1") || n.contains("lambda2");
    if (tables) {
      if (n.contains("sigma2") || n.contains("s")) throw ConfigError("noise: give either sigma2/s or lambda tables");
      if (!n.contains("lambda1") || !n.contains("lambda2")) throw ConfigError("noise: need both lambda1 and lambda2");
      cfg.noise_power_law = false;
      cfg.lambda1 = get_numbers(n.at("lambda1"), "noise.lambda1");
      cfg.lambda2 = get_numbers(n.at("lambda2"), "noise.lambda2");
    } else {
      cfg.sigma2 = get_number(n, "sigma2", "noise", cfg.sigma2);
      cfg.s = get_number(n, "s", "noise", cfg.s);
    }
  }
  if (doc.contains("run")) {
    const auto& r = doc.at("run");
    check_keys(r, "run", {"T", "dt", "eps", "record_every", "start_time", "linear", "noise_dt", "x0"});
    cfg.run.T = get_number(r, "T", "run", cfg.run.T);
    cfg.run.dt = get_number(r, "dt", "run", cfg.run.dt);
    cfg.run.eps = get_number(r, "eps", "run", cfg.run.eps);
    cfg.run.record_every = get_int(r, "record_every", "run", cfg.run.record_every);
    cfg.run.start_time = get_number(r, "start_time", "run", cfg.run.start_time);
    cfg.run.linear = get_bool(r, "linear", "run", cfg.run.linear);
    cfg.run.noise_dt = get_number(r, "noise_dt", "run", cfg.run.noise_dt);
    if (r.contains("x0")) cfg.x0 = parse_initial(r.at("x0"), "run.x0");
  }
  if (doc.contains("simulate")) {
    const auto& b = doc.at("simulate");
    check_keys(b, "simulate", {"paths"});
    cfg.simulate.paths = get_int(b, "paths", "simulate", cfg.simulate.paths);
  }
  if (doc.contains("couple")) {
    const auto& b = doc.at("couple");
    check_keys(b, "couple", {"paths", "distance", "x_bar"});
    cfg.couple.paths = get_int(b, "paths", "couple", cfg.couple.paths);
    cfg.couple.distance = get_number(b, "distance", "couple", cfg.couple.distance);
    if (b.contains("x_bar")) {
      cfg.couple.has_x_bar = true;
      cfg.couple.x_bar = parse_initial(b.at("x_bar"), "couple.x_bar");
    }
  }
  if (doc.contains("convergence")) {
    const auto& b = doc.at("convergence");
    check_keys(b, "convergence", {"eps", "paths"});
    if (b.contains("eps")) cfg.convergence.eps = get_numbers(b.at("eps"), "convergence.eps");
    cfg.convergence.paths = get_int(b, "paths", "convergence", cfg.convergence.paths);
  }
  if (doc.contains("moments")) {
    const auto& b = doc.at("moments");
    check_keys(b, "moments", {"paths"});
    cfg.moments.paths = get_int(b, "paths", "moments", cfg.moments.paths);
  }
  if (doc.contains("invariant")) {
    const auto& b = doc.at("invariant");
    check_keys(b, "invariant", {"burn_in", "spacing", "samples", "ensemble"});
    cfg.invariant.burn_in = get_number(b, "burn_in", "invariant", cfg.invariant.burn_in);
    cfg.invariant.spacing = get_number(b, "spacing", "invariant", cfg.invariant.spacing);
    cfg.invariant.samples = get_int(b, "samples", "invariant", cfg.invariant.samples);
    cfg.invariant.ensemble = get_int(b, "ensemble", "invariant", cfg.invariant.ensemble);
  }
  if (doc.contains("dynkin")) {
    const auto& b = doc.at("dynkin");
    check_keys(b, "dynkin", {"h_modes", "coefficient", "t", "paths", "dt", "linear", "x0"});
    if (b.contains("h_modes")) cfg.dynkin.h_modes = get_ints(b.at("h_modes"), "dynkin.h_modes");
    cfg.dynkin.coefficient = get_number(b, "coefficient", "dynkin", cfg.dynkin.coefficient);
    cfg.dynkin.t = get_number(b, "t", "dynkin", cfg.dynkin.t);
    cfg.dynkin.paths = get_int(b, "paths", "dynkin", cfg.dynkin.paths);
    cfg.dynkin.dt = get_number(b, "dt", "dynkin", cfg.dynkin.dt);
    cfg.dynkin.linear = get_bool(b, "linear", "dynkin", cfg.dynkin.linear);
    if (b.contains("x0")) cfg.dynkin.x0 = parse_initial(b.at("x0"), "dynkin.x0");
  }
  for (const char* empty : {"eigen", "linear-oracle", "acceptance"}) {
    if (doc.contains(empty)) check_keys(doc.at(empty), empty, {});
  }
  validate(cfg.model);
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// The fully resolved configuration, defaults included.
inline json to_json(const ExperimentConfig& cfg) {
  json j;
  j["master_seed"] = cfg.master_seed;
  json m;
  m["alpha"] = cfg.model.alpha;
  m["gamma"] = cfg.model.gamma;
  m["xi1"] = cfg.model.xi1;
  m["c"] = detail::profile_to_json(cfg.model.c);
  m["p"] = detail::profile_to_json(cfg.model.p);
  m["n_modes"] = cfg.model.n_modes;
  m["n_grid"] = cfg.model.n_grid;
  j["model"] = m;
  json n;
  if (cfg.noise_power_law) {
    n["sigma2"] = cfg.sigma2;
    n["s"] = cfg.s;
  } else {
    n["lambda1"] = cfg.lambda1;
    n["lambda2"] = cfg.lambda2;
  }
  j["noise"] = n;
  json r;
  r["T"] = cfg.run.T;
  r["dt"] = cfg.run.dt;
  r["eps"] = cfg.run.eps;
  r["record_every"] = cfg.run.record_every;
  r["start_time"] = cfg.run.start_time;
  r["linear"] = cfg.run.linear;
  r["noise_dt"] = cfg.run.noise_dt;
  r["x0"] = detail::initial_to_json(cfg.x0);
  j["run"] = r;
  j["simulate"] = {{"paths", cfg.simulate.paths}};
  json c{{"paths", cfg.couple.paths}, {"distance", cfg.couple.distance}};
  if (cfg.couple.has_x_bar) c["x_bar"] = detail::initial_to_json(cfg.couple.x_bar);
  j["couple"] = c;
  j["convergence"] = {{"eps", cfg.convergence.eps}, {"paths", cfg.convergence.paths}};
  j["moments"] = {{"paths", cfg.moments.paths}};
  j["invariant"] = {{"burn_in", cfg.invariant.burn_in},
                    {"spacing", cfg.invariant.spacing},
                    {"samples", cfg.invariant.samples},
                    {"ensemble", cfg.invariant.ensemble}};
  j["dynkin"] = {{"h_modes", cfg.dynkin.h_modes}, {"coefficient", cfg.dynkin.coefficient},
                 {"t", cfg.dynkin.t},             {"paths", cfg.dynkin.paths},
                 {"dt", cfg.dynkin.dt},           {"linear", cfg.dynkin.linear},
                 {"x0", detail::initial_to_json(cfg.dynkin.x0)}};
  return j;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

/// Replaces non-finite numbers by null so the document stays valid JSON.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace fhn

#endif  // FHN_IO_HPP
