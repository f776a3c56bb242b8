#ifndef FHN_CLI_HPP
#define FHN_CLI_HPP

// Command-line front end. Exit status: 0 success, 1 acceptance failure,
// 2 invalid configuration or arguments, 3 numerical blow-up.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fhn/acceptance.hpp"
#include "fhn/commands.hpp"
#include "fhn/errors.hpp"
#include "fhn/io.hpp"

namespace fhn {

enum ExitCode : int { exit_ok = 0, exit_acceptance_failed = 1, exit_config = 2, exit_blowup = 3 };

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Spectral-Galerkin experiments for the stochastic FitzHugh-Nagumo system"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(version_string));

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::string out_dir = "fhn_out";
  bool quick = false;
  std::optional<unsigned> workers;
  std::optional<std::vector<int>> h_modes;
  std::optional<double> t, dt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--workers", workers, "worker threads (default: FHN_WORKERS or hardware concurrency)");
  };

  std::vector<CLI::App*> subs;
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    common(sub);
    if (name != "eigen" && name != "linear-oracle") sub->add_option("--paths", paths, "number of sample paths");
    if (name == "acceptance") sub->add_flag("--quick", quick, "reduced sample sizes");
    if (name == "dynkin") {
      sub->add_option("--h-modes", h_modes, "u-modes carrying the cylinder direction")->expected(1, -1);
      sub->add_option("--t", t, "time horizon");
      sub->add_option("--dt", dt, "time step");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  std::string name;
  for (auto* sub : subs) {
    if (sub->parsed()) name = sub->get_name();
  }

  try {
    if (name == "acceptance") {
      AcceptanceOptions ao;
      ao.quick = quick;
      if (seed) ao.seed = *seed;
      if (workers) ao.workers = *workers;
      require(ao.workers >= 1, "--workers must be >= 1");
      auto results = run_acceptance(ao, [&](const CriterionResult& r) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "[%s] %2d %-32s (%.1fs) ", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                      r.seconds);
        out << buf << r.summary << std::endl;
      });
      std::filesystem::create_directories(out_dir);
      json j = acceptance_to_json(results, ao);
      write_json(std::filesystem::path(out_dir) / "acceptance.json", j);
      return j["all_pass"].get<bool>() ? exit_ok : exit_acceptance_failed;
    }
    ExperimentConfig cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
    CommandOptions co;
    co.out_dir = out_dir;
    co.seed = seed;
    co.paths = paths;
    co.quick = quick;
    if (workers) co.workers = *workers;
    require(co.workers >= 1, "--workers must be >= 1");
    co.h_modes = h_modes;
    co.t = t;
    co.dt = dt;
    run_experiment(name, cfg, co);
    out << name << ": wrote " << co.out_dir.string() << std::endl;
    return exit_ok;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << std::endl;
    return exit_config;
  } catch (const BlowUpError& e) {
    err << "numerical blow-up: " << e.what() << std::endl;
    return exit_blowup;
  }
}

}  // namespace fhn

#endif  // FHN_CLI_HPP
