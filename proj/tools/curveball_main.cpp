// Command-line front end: run, grid, cost, verify.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "curveball/bench/config.hpp"
#include "curveball/bench/cost.hpp"
#include "curveball/bench/experiment.hpp"
#include "curveball/bench/verify.hpp"
#include "curveball/errors.hpp"

namespace bench = curveball::bench;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats;
  std::optional<std::string> out;
};

bench::ExperimentConfig load(const Overrides& o) {
  auto config = bench::load_config(o.config);
  if (o.seed) config.seed = *o.seed;
  if (o.repeats) config.repeats = *o.repeats;
  if (o.out) config.output_dir = *o.out;
  config.validate();
  return config;
}

void print_summary(const bench::ExperimentResult& result) {
  const auto& s = result.summary;
  std::printf("%s on %s: %zu/%zu converged", result.optimizer.c_str(), result.problem.c_str(),
              s.converged, s.total);
  if (s.converged > 0) {
    std::printf(", iterations %.2f +- %.2f", s.mean_iterations, s.std_iterations);
  }
  std::printf(", mean final loss %.3g\n", result.mean_final_loss());
}

int run(const Overrides& o) {
  const auto config = load(o);
  if (!config.grid.empty()) {
    throw curveball::ConfigError("config has a grid; use the grid subcommand");
  }
  print_summary(bench::run_experiment(config));
  return 0;
}

int grid(const Overrides& o) {
  const auto config = load(o);
  if (config.grid.empty()) throw curveball::ConfigError("config has no grid");
  const auto result = bench::grid_search(config);
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    std::printf("%s ", i == result.best ? "*" : " ");
    print_summary(result.points[i]);
  }
  std::printf("best: %s\n", result.best_result().optimizer.c_str());
  return 0;
}

int cost(const Overrides& o) {
  const auto config = load(o);
  auto optimizers = config.cost_optimizers;
  if (optimizers.empty()) optimizers.push_back(config.optimizer);
  const auto problem = bench::make_problem(config.problem);
  const auto report = bench::measure_cost(
      *problem, optimizers, {config.cost_warmup, config.cost_iterations, config.seed});
  const auto table = bench::cost_table(report);
  std::cout << bench::to_csv(table);
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    bench::write_csv(config.output_dir / "cost.csv", table);
  }
  return 0;
}

int verify(std::uint64_t seed) {
  const auto report = bench::verify(seed);
  std::cout << report.table();
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CURVEBALL optimizer benchmarks"};
  app.require_subcommand(1);

  Overrides overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", overrides.config, "JSON experiment config")->required();
    sub->add_option("--seed", overrides.seed, "Base seed for run streams");
    sub->add_option("--repeats", overrides.repeats, "Number of runs");
    sub->add_option("--out", overrides.out, "Output directory for CSV files");
  };
  auto* run_cmd = app.add_subcommand("run", "Run one optimizer for all repeats");
  add_config(run_cmd);
  auto* grid_cmd = app.add_subcommand("grid", "Grid-search optimizer hyperparameters");
  add_config(grid_cmd);
  auto* cost_cmd = app.add_subcommand("cost", "Measure per-iteration time and AD passes");
  add_config(cost_cmd);
  std::uint64_t verify_seed = 0;
  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle and invariant suites");
  verify_cmd->add_option("--seed", verify_seed, "Seed for random test points");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run_cmd->parsed()) return run(overrides);
    if (grid_cmd->parsed()) return grid(overrides);
    if (cost_cmd->parsed()) return cost(overrides);
    if (verify_cmd->parsed()) return verify(verify_seed);
  } catch (const curveball::Error& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 2;
  }
  return 0;
}
