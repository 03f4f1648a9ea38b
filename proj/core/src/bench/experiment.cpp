#include "curveball/bench/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "curveball/errors.hpp"

namespace curveball::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_count(std::uint64_t value) { return std::to_string(value); }

std::uint64_t parse_count(const std::string& text) {
  const double value = parse_double(text);
  if (!(value >= 0.0) || value != std::floor(value)) throw IoError("not a count: '" + text + "'");
  return static_cast<std::uint64_t>(value);
}

}  // namespace

CsvTable trace_table(const RunTrace& trace) {
  CsvTable table;
  table.header.assign(std::begin(kTraceColumns), std::end(kTraceColumns));
  table.rows.reserve(trace.size());
  for (const auto& row : trace) {
    table.rows.push_back({format_count(row.iteration), format_double(row.loss),
                          format_double(row.noise_free_loss), format_double(row.step_norm),
                          format_double(row.beta), format_double(row.rho),
                          format_double(row.lambda), format_double(row.gamma),
                          std::to_string(row.wall_ns), format_count(row.passes.primal),
                          format_count(row.passes.tangent), format_count(row.passes.reverse)});
  }
  return table;
}

RunTrace trace_from_table(const CsvTable& table) {
  const std::vector<std::string> expected(std::begin(kTraceColumns), std::end(kTraceColumns));
  if (table.header != expected) throw IoError("not a trace table");
  RunTrace trace;
  trace.reserve(table.rows.size());
  for (const auto& cells : table.rows) {
    TraceRow row;
    row.iteration = parse_count(cells[0]);
    row.loss = parse_double(cells[1]);
    row.noise_free_loss = parse_double(cells[2]);
    row.step_norm = parse_double(cells[3]);
    row.beta = parse_double(cells[4]);
    row.rho = parse_double(cells[5]);
    row.lambda = parse_double(cells[6]);
    row.gamma = parse_double(cells[7]);
    row.wall_ns = static_cast<std::int64_t>(parse_double(cells[8]));
    row.passes = {parse_count(cells[9]), parse_count(cells[10]), parse_count(cells[11])};
    trace.push_back(row);
  }
  return trace;
}

double ExperimentResult::mean_final_loss() const {
  if (runs.empty()) return std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& run : runs) {
    if (!std::isfinite(run.final_loss)) return std::numeric_limits<double>::infinity();
    sum += run.final_loss;
  }
  return sum / static_cast<double>(runs.size());
}

Summary summarize(const std::vector<RunResult>& runs) {
  std::vector<double> iterations;
  for (const auto& run : runs) {
    if (run.converged) iterations.push_back(static_cast<double>(run.iterations));
  }
  Summary summary;
  summary.total = runs.size();
  summary.converged = iterations.size();
  summary.mean_iterations = iterations.empty() ? kNaN : mean(iterations);
  summary.std_iterations = iterations.empty() ? kNaN : sample_std(iterations);
  return summary;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("CURVEBALL_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && value >= 1) {
      workers = std::min(workers, static_cast<std::size_t>(value));
    }
  }
  return std::max<std::size_t>(1, std::min(workers, jobs));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task,
                  const std::function<bool()>& stop) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      if (stop && stop()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      task(i);
    }
  };
  const std::size_t workers = worker_count(n);
  if (workers <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
}

RunResult run_single(const autodiff::Problem& problem, const optim::OptimizerSpec& spec,
                     const ExperimentConfig& config, std::size_t run, bool keep_trace) {
  using Clock = std::chrono::steady_clock;
  RunResult result;
  result.run = run;

  Rng rng = Rng(config.seed).derive(run);
  auto optimizer = optim::make_optimizer(spec);
  Tensor w = problem.initial_point(rng);
  optimizer->reset(problem, w);

  auto& counters = autodiff::pass_counters();
  auto noise_free = [&] {
    const autodiff::PassCounters saved = counters;
    const double value = problem.reference_loss(w);
    counters = saved;
    return value;
  };

  const double initial = noise_free();
  const double scale = config.tolerance_mode == ToleranceMode::kRelative ? initial : 1.0;
  auto reached = [&](double f) { return f <= config.tolerance * scale; };

  result.final_loss = initial;
  if (!std::isfinite(initial)) return result;
  if (reached(initial)) {
    result.converged = true;
    return result;
  }

  for (std::size_t k = 1; k <= config.max_iterations; ++k) {
    const autodiff::PassCounters before = counters;
    const auto start = Clock::now();
    optim::StepInfo info;
    try {
      info = optimizer->step(problem, w, rng);
    } catch (const Error& error) {
      result.error = error.what();
      result.iterations = k - 1;
      result.final_loss = all_finite(w) ? noise_free() : kNaN;
      return result;
    }
    const auto elapsed = Clock::now() - start;
    const autodiff::PassCounters passes = counters - before;

    const bool finite = all_finite(w);
    const bool check = k % config.check_every == 0 || k == config.max_iterations || !finite;
    const double f = !finite ? kNaN : check ? noise_free() : kNaN;

    if (keep_trace) {
      TraceRow row;
      row.iteration = k;
      row.loss = info.loss;
      row.noise_free_loss = f;
      row.step_norm = info.step_norm;
      row.beta = info.beta;
      row.rho = info.rho;
      row.lambda = info.lambda;
      row.gamma = info.gamma;
      row.wall_ns = config.record_wall_time
                        ? std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count()
                        : 0;
      row.passes = passes;
      result.trace.push_back(row);
    }

    result.iterations = k;
    if (!check) continue;
    result.final_loss = f;
    if (!std::isfinite(f)) return result;
    if (reached(f)) {
      result.converged = true;
      return result;
    }
  }
  return result;
}

ExperimentResult run_experiment(const autodiff::Problem& problem, const ExperimentConfig& config) {
  config.validate();
  const bool keep = !config.output_dir.empty() && config.write_traces;
  ExperimentResult result;
  result.optimizer = config.optimizer.label();
  result.problem = config.problem.label();
  result.spec = config.optimizer;
  result.runs.resize(config.repeats);
  parallel_for(config.repeats, [&](std::size_t r) {
    result.runs[r] = run_single(problem, config.optimizer, config, r, keep);
  });
  result.summary = summarize(result.runs);
  if (!config.output_dir.empty()) write_outputs(result, config.output_dir);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto problem = make_problem(config.problem);
  return run_experiment(*problem, config);
}

std::vector<optim::OptimizerSpec> grid_points(
    const optim::OptimizerSpec& base, const std::map<std::string, std::vector<double>>& grid) {
  std::vector<optim::OptimizerSpec> points = {base};
  for (const auto& [key, values] : grid) {
    std::vector<optim::OptimizerSpec> next;
    for (const auto& point : points) {
      for (double value : values) {
        auto spec = point;
        spec.params[key] = value;
        next.push_back(std::move(spec));
      }
    }
    points = std::move(next);
  }
  return points;
}

namespace {

// A grid point is abandoned once it provably cannot be selected: its failures
// exceed what the rate allows, or even with every unfinished run converging
// at once its mean would exceed `bound` (the best mean so far). A run is
// also cut short once converging at that step would itself break the bound;
// such a run counts as a failure for pruning and is rerun in full if the
// point survives. The kept prefix ends at the first run that decides the
// outcome, which makes it independent of the number of workers.
ExperimentResult run_grid_point(const autodiff::Problem& problem, const ExperimentConfig& config,
                                const optim::OptimizerSpec& spec, std::optional<double> bound) {
  ExperimentResult result;
  result.optimizer = spec.label();
  result.problem = config.problem.label();
  result.spec = spec;
  result.runs.resize(config.repeats);

  const bool prune = config.selection == Selection::kIterations;
  const std::size_t n = config.repeats;
  const auto allowed = static_cast<std::size_t>(
      std::floor((1.0 - config.min_convergence_rate) * static_cast<double>(n) + 1e-9));

  ExperimentConfig capped = config;
  if (prune && bound) {
    // A run can converge at its starting point, so converging after t steps
    // only guarantees a mean of at least t / n.
    const double limit = std::floor(*bound * static_cast<double>(n));
    if (limit < static_cast<double>(config.max_iterations)) {
      auto cap = static_cast<std::size_t>(std::max(limit, 1.0));
      cap = (cap + config.check_every - 1) / config.check_every * config.check_every;
      capped.max_iterations = std::min(cap, config.max_iterations);
    }
  }
  auto cut_short = [&](const RunResult& run) {
    return !run.converged && run.error.empty() && std::isfinite(run.final_loss) &&
           run.iterations == capped.max_iterations && capped.max_iterations < config.max_iterations;
  };

  // Lower bound on the mean over converged runs when the other runs all
  // converge without a step.
  auto hopeless = [&](std::size_t failures, double sum, std::size_t converged,
                      std::size_t unfinished) {
    if (failures > allowed) return true;
    if (!bound || converged + unfinished == 0) return false;
    const double least = sum / static_cast<double>(converged + unfinished);
    return least > *bound;
  };

  std::vector<char> done(n, 0);
  std::mutex mutex;
  std::size_t failures = 0, converged = 0, finished = 0;
  double sum = 0.0;
  parallel_for(
      n,
      [&](std::size_t r) {
        RunResult run = run_single(problem, spec, capped, r, false);
        std::lock_guard<std::mutex> lock(mutex);
        if (run.converged) {
          sum += static_cast<double>(run.iterations);
          ++converged;
        } else {
          ++failures;
        }
        ++finished;
        result.runs[r] = std::move(run);
        done[r] = 1;
      },
      [&] {
        std::lock_guard<std::mutex> lock(mutex);
        return prune && hopeless(failures, sum, converged, n - finished);
      });

  if (prune) {
    failures = converged = 0;
    sum = 0.0;
    for (std::size_t r = 0; r < n && done[r]; ++r) {
      const auto& run = result.runs[r];
      if (run.converged) {
        sum += static_cast<double>(run.iterations);
        ++converged;
      } else {
        ++failures;
      }
      if (hopeless(failures, sum, converged, n - r - 1)) {
        result.runs.resize(r + 1);
        result.pruned = true;
        break;
      }
    }
    if (!result.pruned) {
      for (auto& run : result.runs) {
        if (cut_short(run)) run = run_single(problem, spec, config, run.run, false);
      }
    }
  }
  result.summary = summarize(result.runs);
  return result;
}

double learning_rate(const optim::OptimizerSpec& spec) {
  const auto it = spec.params.find("lr");
  return it == spec.params.end() ? 0.0 : it->second;
}

}  // namespace

GridResult grid_search(const autodiff::Problem& problem, const ExperimentConfig& config) {
  config.validate();
  GridResult grid;
  const auto specs = grid_points(config.optimizer, config.grid);
  grid.points.resize(specs.size());
  // Large learning rates first: they diverge or converge quickly, and the
  // best mean found so far lets slow points stop early.
  std::vector<std::size_t> order(specs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return learning_rate(specs[a]) > learning_rate(specs[b]);
  });
  std::optional<double> bound;
  for (std::size_t i : order) {
    auto& point = grid.points[i];
    point = run_grid_point(problem, config, specs[i], bound);
    if (!point.pruned && point.summary.converged > 0 &&
        point.summary.convergence_rate() >= config.min_convergence_rate &&
        (!bound || point.summary.mean_iterations < *bound)) {
      bound = point.summary.mean_iterations;
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const auto& point = grid.points[i];
    if (config.selection == Selection::kIterations) {
      if (point.pruned || point.summary.converged == 0 ||
          point.summary.convergence_rate() < config.min_convergence_rate) {
        continue;
      }
      if (!best) {
        best = i;
        continue;
      }
      const auto& current = grid.points[*best];
      const double a = point.summary.mean_iterations;
      const double b = current.summary.mean_iterations;
      if (a < b || (a == b && learning_rate(point.spec) < learning_rate(current.spec))) best = i;
    } else {
      const double loss = point.mean_final_loss();
      if (!std::isfinite(loss)) continue;
      if (!best) {
        best = i;
        continue;
      }
      const auto& current = grid.points[*best];
      const double other = current.mean_final_loss();
      if (loss < other ||
          (loss == other && learning_rate(point.spec) < learning_rate(current.spec))) {
        best = i;
      }
    }
  }
  if (!best) {
    throw NoConvergentSetting("no grid point of " + config.optimizer.name + " on " +
                              config.problem.label() + " meets the selection criterion");
  }
  grid.best = *best;

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_csv(config.output_dir / "grid.csv", grid_table(grid));
    ExperimentConfig chosen = config;
    chosen.optimizer = grid.best_result().spec;
    chosen.grid.clear();
    // Rerun the winner to collect traces; runs are deterministic.
    grid.points[grid.best] = run_experiment(problem, chosen);
  }
  return grid;
}

GridResult grid_search(const ExperimentConfig& config) {
  const auto problem = make_problem(config.problem);
  return grid_search(*problem, config);
}

CsvTable runs_table(const ExperimentResult& result) {
  CsvTable table;
  table.header = {"run", "iterations", "converged", "final_loss", "error"};
  for (const auto& run : result.runs) {
    table.rows.push_back({std::to_string(run.run), std::to_string(run.iterations),
                          run.converged ? "1" : "0", format_double(run.final_loss), run.error});
  }
  return table;
}

CsvTable summary_table(const std::vector<ExperimentResult>& results) {
  CsvTable table;
  table.header = {"optimizer", "problem", "mean_iters", "std_iters", "converged", "total"};
  for (const auto& result : results) {
    table.rows.push_back({result.optimizer, result.problem,
                          format_double(result.summary.mean_iterations),
                          format_double(result.summary.std_iterations),
                          std::to_string(result.summary.converged),
                          std::to_string(result.summary.total)});
  }
  return table;
}

CsvTable grid_table(const GridResult& grid) {
  CsvTable table = summary_table(grid.points);
  table.header.insert(table.header.end(), {"mean_final_loss", "pruned", "selected"});
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    table.rows[i].push_back(format_double(grid.points[i].mean_final_loss()));
    table.rows[i].push_back(grid.points[i].pruned ? "1" : "0");
    table.rows[i].push_back(i == grid.best ? "1" : "0");
  }
  return table;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_csv(dir / "summary.csv", summary_table({result}));
  write_csv(dir / "runs.csv", runs_table(result));
  bool any = false;
  for (const auto& run : result.runs) any = any || !run.trace.empty();
  if (!any) return;
  std::filesystem::create_directories(dir / "traces", ec);
  if (ec) throw IoError("cannot create traces directory: " + ec.message());
  for (const auto& run : result.runs) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu.csv", run.run);
    write_csv(dir / "traces" / name, trace_table(run.trace));
  }
}

}  // namespace curveball::bench
