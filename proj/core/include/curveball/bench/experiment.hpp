#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "curveball/autodiff/pass_counters.hpp"
#include "curveball/autodiff/problem.hpp"
#include "curveball/bench/config.hpp"
#include "curveball/bench/csv.hpp"
#include "curveball/bench/stats.hpp"
#include "curveball/optim/optimizer.hpp"

namespace curveball::bench {

/// One optimizer step. Pass counts are those of the step alone; the
/// noise-free loss is evaluated out of band and not counted.
struct TraceRow {
  std::size_t iteration = 0;  ///< 1 for the first step
  double loss = 0.0;          ///< objective on the step's batch
  double noise_free_loss = 0.0;  ///< NaN on rows where it was not evaluated
  double step_norm = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  std::int64_t wall_ns = 0;
  autodiff::PassCounters passes;
};

using RunTrace = std::vector<TraceRow>;

inline constexpr const char* kTraceColumns[] = {
    "iteration", "loss",   "noise_free_loss", "step_norm",     "beta",          "rho",
    "lambda",    "gamma",  "wall_ns",         "primal_passes", "tangent_passes", "reverse_passes"};

CsvTable trace_table(const RunTrace& trace);
/// Inverse of trace_table. Throws IoError on a malformed table.
RunTrace trace_from_table(const CsvTable& table);

struct RunResult {
  std::size_t run = 0;
  bool converged = false;
  /// Steps taken: to reach the tolerance when converged, otherwise until the
  /// run stopped (budget, divergence or error).
  std::size_t iterations = 0;
  double final_loss = 0.0;  ///< last noise-free loss
  std::string error;        ///< set when the optimizer threw
  RunTrace trace;           ///< kept only when requested
};

struct ExperimentResult {
  std::string optimizer;  ///< spec label, including hyperparameters
  std::string problem;
  optim::OptimizerSpec spec;
  std::vector<RunResult> runs;
  Summary summary;
  /// Grid search stopped this point once it could no longer be selected;
  /// `runs` holds the prefix that was run.
  bool pruned = false;

  /// Mean final noise-free loss, +inf when any run ended non-finite.
  double mean_final_loss() const;
};

Summary summarize(const std::vector<RunResult>& runs);

/// Worker threads for `jobs` independent tasks: hardware concurrency, capped
/// by CURVEBALL_THREADS when set, never more than `jobs`.
std::size_t worker_count(std::size_t jobs);

/// Calls task(i) for i in [0, n) on a worker pool. Indices are handed out in
/// increasing order; once `stop()` returns true no new index starts.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task,
                  const std::function<bool()>& stop = {});

/// One run: RNG stream derive(seed, run), start at problem.initial_point,
/// stop at the tolerance on the noise-free loss, max_iterations, a
/// non-finite iterate or loss, or an optimizer error.
RunResult run_single(const autodiff::Problem& problem, const optim::OptimizerSpec& spec,
                     const ExperimentConfig& config, std::size_t run, bool keep_trace);

/// All repeats of config.optimizer on `problem`. Writes summary.csv,
/// runs.csv and traces/ when config.output_dir is set.
ExperimentResult run_experiment(const autodiff::Problem& problem, const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config);

struct GridResult {
  std::vector<ExperimentResult> points;
  std::size_t best = 0;

  const ExperimentResult& best_result() const { return points.at(best); }
};

/// Cartesian product of the grid, in key order, applied on top of the base
/// optimizer parameters.
std::vector<optim::OptimizerSpec> grid_points(const optim::OptimizerSpec& base,
                                              const std::map<std::string, std::vector<double>>& grid);

/// Runs every grid point and selects per config.selection. Points are run in
/// decreasing "lr" order and stopped early once they cannot win. Under
/// Selection::kIterations the point with the fewest mean iterations among
/// those converging in at least min_convergence_rate of runs wins; ties go to
/// the smaller "lr". Throws NoConvergentSetting when no point qualifies.
/// With an output directory, writes grid.csv and the best point's outputs.
GridResult grid_search(const autodiff::Problem& problem, const ExperimentConfig& config);
GridResult grid_search(const ExperimentConfig& config);

CsvTable runs_table(const ExperimentResult& result);
/// Columns optimizer,problem,mean_iters,std_iters,converged,total.
CsvTable summary_table(const std::vector<ExperimentResult>& results);
CsvTable grid_table(const GridResult& grid);

/// Writes summary.csv, runs.csv and, for runs holding traces,
/// traces/run_NNNN.csv.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace curveball::bench
