#include "curveball/bench/cost.hpp"

#include <chrono>

#include "curveball/bench/stats.hpp"
#include "curveball/errors.hpp"

namespace curveball::bench {

namespace {

template <typename Field>
double mean_passes(const std::vector<autodiff::PassCounters>& passes, Field field) {
  if (passes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : passes) sum += static_cast<double>(p.*field);
  return sum / static_cast<double>(passes.size());
}

}  // namespace

double CostRow::mean_primal() const { return mean_passes(passes, &autodiff::PassCounters::primal); }
double CostRow::mean_tangent() const {
  return mean_passes(passes, &autodiff::PassCounters::tangent);
}
double CostRow::mean_reverse() const {
  return mean_passes(passes, &autodiff::PassCounters::reverse);
}

const CostRow& CostReport::find(const std::string& name) const {
  for (const auto& row : rows) {
    if (row.optimizer == name) return row;
  }
  throw ConfigError("no cost row for optimizer '" + name + "'");
}

double CostReport::ratio(const std::string& a, const std::string& b) const {
  return find(a).median_ns / find(b).median_ns;
}

CostReport measure_cost(const autodiff::Problem& problem,
                        const std::vector<optim::OptimizerSpec>& optimizers,
                        const CostOptions& options) {
  using Clock = std::chrono::steady_clock;
  struct Lane {
    std::unique_ptr<optim::Optimizer> optimizer;
    Tensor w;
    Rng rng;
    std::vector<double> times;
  };

  std::vector<Lane> lanes;
  for (std::size_t i = 0; i < optimizers.size(); ++i) {
    // All optimizers start from the same point and see the same batches.
    Lane lane{optim::make_optimizer(optimizers[i]), Tensor(), Rng(options.seed).derive(0), {}};
    lane.w = problem.initial_point(lane.rng);
    lane.optimizer->reset(problem, lane.w);
    lanes.push_back(std::move(lane));
  }

  CostReport report;
  report.problem = problem.name();
  report.rows.resize(lanes.size());
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    report.rows[i].optimizer = optimizers[i].name;
    report.rows[i].iterations = options.iterations;
  }

  auto& counters = autodiff::pass_counters();
  for (std::size_t round = 0; round < options.warmup + options.iterations; ++round) {
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      auto& lane = lanes[i];
      const autodiff::PassCounters before = counters;
      const auto start = Clock::now();
      lane.optimizer->step(problem, lane.w, lane.rng);
      const auto elapsed = Clock::now() - start;
      if (round < options.warmup) continue;
      lane.times.push_back(
          static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count()));
      report.rows[i].passes.push_back(counters - before);
    }
  }
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    report.rows[i].median_ns = median(lanes[i].times);
    report.rows[i].mean_ns = mean(lanes[i].times);
  }
  return report;
}

CsvTable cost_table(const CostReport& report) {
  CsvTable table;
  table.header = {"optimizer",       "problem",          "median_ns",       "mean_ns",
                  "iterations",      "primal_per_step", "tangent_per_step", "reverse_per_step"};
  for (const auto& row : report.rows) {
    table.rows.push_back({row.optimizer, report.problem, format_double(row.median_ns),
                          format_double(row.mean_ns), std::to_string(row.iterations),
                          format_double(row.mean_primal()), format_double(row.mean_tangent()),
                          format_double(row.mean_reverse())});
  }
  return table;
}

}  // namespace curveball::bench
