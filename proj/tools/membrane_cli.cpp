#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "membrane/experiments.hpp"
#include "membrane/scenario.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string scenario_name;
  std::string out_dir;
  std::vector<double> kappa;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Path to a scenario JSON file");
  cmd->add_option("--scenario", args.scenario_name, "Name of a built-in scenario");
  cmd->add_option("--out", args.out_dir, "Output directory (default: scenario's)");
  cmd->add_option("--kappa", args.kappa, "Override the kappa list")->delimiter(',');
  cmd->add_option("--seed", args.seed, "Override the RNG seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

membrane::ScenarioConfig load(const CommonArgs& args) {
  if (args.config_path.empty() == args.scenario_name.empty()) {
    throw membrane::ConfigError("give exactly one of --config or --scenario");
  }
  membrane::ScenarioConfig config =
      args.config_path.empty() ? membrane::preset(args.scenario_name)
                               : membrane::load_scenario_file(args.config_path);
  if (!args.kappa.empty()) {
    for (std::size_t i = 0; i < args.kappa.size(); ++i) {
      if (!(args.kappa[i] > 0.0) ||
          (i > 0 && !(args.kappa[i - 1] < args.kappa[i]))) {
        throw membrane::ConfigError("--kappa must be positive and strictly increasing");
      }
    }
    config.kappa = args.kappa;
  }
  if (args.seed_set) config.seed = args.seed;
  if (!args.out_dir.empty()) config.output = args.out_dir;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion across semi-permeable membranes and its Markov-chain limit"};
  app.require_subcommand(1);

  CommonArgs simulate_args, converge_args, limit_args, mc_args;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Evolve the PDE for each kappa; write snapshots and masses");
  add_common(simulate, simulate_args);
  CLI::App* converge = app.add_subcommand(
      "converge", "Sweep kappa and compare against the limit chain");
  add_common(converge, converge_args);
  CLI::App* limit = app.add_subcommand(
      "limit", "Build Q, Q*, C and evolve the limit ODE system");
  add_common(limit, limit_args);
  CLI::App* mc = app.add_subcommand(
      "mc", "Monte Carlo particle simulation of the 1d scenario");
  add_common(mc, mc_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const int workers = membrane::resolve_worker_count();
    if (simulate->parsed()) {
      const auto config = load(simulate_args);
      membrane::run_scenario(config, config.output, workers);
    } else if (converge->parsed()) {
      const auto config = load(converge_args);
      membrane::run_convergence(config, config.output, workers);
    } else if (limit->parsed()) {
      const auto config = load(limit_args);
      membrane::run_limit(config, config.output);
    } else if (mc->parsed()) {
      const auto config = load(mc_args);
      membrane::run_mc(config, config.output, workers);
    }
  } catch (const membrane::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const membrane::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
