#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "curveball/autodiff/problem.hpp"
#include "curveball/optim/optimizer.hpp"
#include "curveball/problems/rosenbrock.hpp"

namespace curveball::bench {

/// Which objective to build. Numeric options live in `params`:
///   rosenbrock:   noise range only
///   quadratic:    dim (20), condition (100)
///   rahimi_recht: d_in, hidden, d_out, samples, kappa, batch_size
///   mlp:          layers, activation, batch_size; blobs data via classes,
///                 per_class, dim, separation unless IDX paths are given
struct ProblemSpec {
  std::string name = "rosenbrock";
  problems::NoiseSpec noise;
  std::map<std::string, double> params;
  std::vector<std::size_t> layers;
  std::string activation = "tanh";
  std::filesystem::path images;
  std::filesystem::path labels;
  /// Seeds the construction of random problem instances (matrices, data).
  /// Runs share one instance; their own streams come from the experiment seed.
  std::uint64_t seed = 0;

  std::string label() const;
};

/// Throws ConfigError for unknown names or parameters.
std::unique_ptr<autodiff::Problem> make_problem(const ProblemSpec& spec);

enum class ToleranceMode {
  kAbsolute,  ///< f(w) <= tolerance
  kRelative,  ///< f(w) / f(w0) <= tolerance
};

/// How grid search ranks points.
enum class Selection {
  kIterations,  ///< fewest mean iterations among points converging often enough
  kFinalLoss,   ///< lowest mean noise-free loss after max_iterations
};

struct ExperimentConfig {
  ProblemSpec problem;
  optim::OptimizerSpec optimizer;
  /// Hyperparameter values to search; empty for a single experiment.
  std::map<std::string, std::vector<double>> grid;

  std::size_t repeats = 100;
  double tolerance = 1e-4;
  ToleranceMode tolerance_mode = ToleranceMode::kAbsolute;
  std::size_t max_iterations = 100000;
  std::uint64_t seed = 0;

  /// Noise-free loss is evaluated every `check_every` steps (and after the last).
  std::size_t check_every = 1;
  Selection selection = Selection::kIterations;
  double min_convergence_rate = 0.9;

  /// Empty: results stay in memory.
  std::filesystem::path output_dir;
  bool write_traces = true;
  /// Off by default so traces are byte-reproducible; wall_ns is then 0.
  bool record_wall_time = false;

  /// Optimizers compared by `cost`.
  std::vector<optim::OptimizerSpec> cost_optimizers;
  std::size_t cost_warmup = 10;
  std::size_t cost_iterations = 100;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// The default learning-rate grid: 10^-5 ... 10^0 in decades, plus momentum
/// {0.9, 0.99} for SGD. Throws ConfigError for optimizers without one.
std::map<std::string, std::vector<double>> default_grid(const std::string& optimizer);

/// Parses a JSON document. Relative data paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view json, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace curveball::bench
