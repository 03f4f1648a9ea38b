#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "curveball/autodiff/pass_counters.hpp"
#include "curveball/autodiff/problem.hpp"
#include "curveball/bench/csv.hpp"
#include "curveball/optim/optimizer.hpp"

namespace curveball::bench {

struct CostOptions {
  std::size_t warmup = 10;
  std::size_t iterations = 100;
  std::uint64_t seed = 0;
};

struct CostRow {
  std::string optimizer;
  double median_ns = 0.0;
  double mean_ns = 0.0;
  std::size_t iterations = 0;
  /// Pass counts of every timed step, in order.
  std::vector<autodiff::PassCounters> passes;

  double mean_primal() const;
  double mean_tangent() const;
  double mean_reverse() const;
};

struct CostReport {
  std::string problem;
  std::vector<CostRow> rows;

  /// Row by optimizer name (the spec name, not the label). Throws ConfigError.
  const CostRow& find(const std::string& name) const;
  /// Median time of `a` over median time of `b`.
  double ratio(const std::string& a, const std::string& b) const;
};

/// Steps the optimizers round-robin, one step each per round, so slow drifts
/// in machine load affect all of them alike. Timing uses a monotonic clock.
CostReport measure_cost(const autodiff::Problem& problem,
                        const std::vector<optim::OptimizerSpec>& optimizers,
                        const CostOptions& options = {});

/// Columns optimizer,problem,median_ns,mean_ns,iterations,primal_per_step,
/// tangent_per_step,reverse_per_step.
CsvTable cost_table(const CostReport& report);

}  // namespace curveball::bench
