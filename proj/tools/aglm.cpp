// Command-line front end: run solver grids, verify invariants, list problems.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aglm/experiment.hpp"

namespace ex = aglm::experiment;

namespace {

constexpr int kUsageError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Levenberg-Marquardt solver benchmarks for composite problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<double> eps;
  std::optional<double> budget;
  std::optional<std::string> out_dir;
  std::optional<unsigned> workers;
  bool log_iterates = false;

  CLI::App* run = app.add_subcommand("run", "run every solver grid point in a config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--eps", eps, "override the stationarity tolerance");
  run->add_option("--budget", budget, "override the weighted oracle budget");
  run->add_option("--out", out_dir, "override the output directory");
  run->add_option("--workers", workers, "worker threads (0 = all cores)");
  run->add_flag("--log-iterates", log_iterates, "append iterate coordinates to each CSV");

  CLI::App* verify = app.add_subcommand("verify", "check oracles and solver invariants");
  verify->add_option("config", config_path, "experiment config (JSON)")->required();

  CLI::App* list = app.add_subcommand("list-problems", "list the bundled problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (list->parsed()) {
    for (const auto& [name, description] : ex::problem_catalog()) {
      std::cout << name << "\t" << description << '\n';
    }
    return 0;
  }

  ex::ExperimentConfig config;
  try {
    config = ex::load_config(config_path);
    if (eps) {
      if (!(*eps >= 0.0)) throw ex::ConfigError("--eps must be nonnegative");
      config.epsilon = *eps;
    }
    if (budget) {
      if (!(*budget >= 0.0)) throw ex::ConfigError("--budget must be nonnegative");
      config.budget = *budget;
    }
    if (out_dir) config.output_dir = *out_dir;
    if (workers) config.workers = *workers;
    if (log_iterates) config.log_iterates = true;
  } catch (const ex::ConfigError& e) {
    std::cerr << "aglm: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (run->parsed()) return ex::run(config, std::cout);
    return ex::verify(config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "aglm: " << e.what() << '\n';
    return 1;
  }
}
