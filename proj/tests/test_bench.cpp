#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "curveball/bench/config.hpp"
#include "curveball/bench/cost.hpp"
#include "curveball/bench/csv.hpp"
#include "curveball/bench/experiment.hpp"
#include "curveball/bench/stats.hpp"
#include "curveball/bench/verify.hpp"
#include "curveball/errors.hpp"
#include "curveball/problems/linear_map.hpp"
#include "curveball/problems/quadratic.hpp"
#include "support.hpp"

using namespace curveball;
using namespace curveball::bench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("curveball_bench_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig quadratic_config() {
  return parse_config(R"({
    "problem": {"name": "quadratic", "dim": 4, "condition": 10},
    "optimizer": {"name": "sgd", "params": {"lr": 0.05, "momentum": 0.5}},
    "repeats": 4, "tolerance": 1e-6, "max_iterations": 2000, "seed": 3
  })");
}

// Delegates everything but flips the sign of the forward-mode product.
class FlippedEvaluation final : public autodiff::Evaluation {
 public:
  explicit FlippedEvaluation(std::unique_ptr<autodiff::Evaluation> inner)
      : inner_(std::move(inner)) {}
  double loss() const override { return inner_->loss(); }
  const Tensor& outputs() const override { return inner_->outputs(); }
  std::size_t parameter_count() const override { return inner_->parameter_count(); }
  Tensor vjp(const Tensor& u) const override { return inner_->vjp(u); }
  Tensor jvp(const Tensor& v) const override { return -inner_->jvp(v); }
  Tensor gradient() const override { return inner_->gradient(); }
  const Tensor& loss_gradient() const override { return inner_->loss_gradient(); }
  const autodiff::LossCurvature& loss_curvature() const override {
    return inner_->loss_curvature();
  }
  autodiff::Projection project(const Tensor& v) const override { return inner_->project(v); }
  double curvature_inner(const autodiff::Projection& a,
                         const autodiff::Projection& b) const override {
    return inner_->curvature_inner(a, b);
  }
  double gradient_inner(const autodiff::Projection& a) const override {
    return inner_->gradient_inner(a);
  }
  Tensor damped_residual(const autodiff::Projection& z, double lambda,
                         bool include_curvature) const override {
    return inner_->damped_residual(z, lambda, include_curvature);
  }
  Tensor curvature_product(const Tensor& v) const override {
    return inner_->curvature_product(v);
  }

 private:
  std::unique_ptr<autodiff::Evaluation> inner_;
};

class FlippedProblem final : public autodiff::Problem {
 public:
  explicit FlippedProblem(const autodiff::Problem& inner) : inner_(inner) {}
  std::string name() const override { return "flipped_" + inner_.name(); }
  std::size_t parameter_count() const override { return inner_.parameter_count(); }
  std::size_t output_count() const override { return inner_.output_count(); }
  autodiff::LossKind loss_kind() const override { return inner_.loss_kind(); }
  Tensor initial_point(Rng& rng) const override { return inner_.initial_point(rng); }
  autodiff::Batch sample_batch(Rng& rng) const override { return inner_.sample_batch(rng); }
  autodiff::Batch reference_batch() const override { return inner_.reference_batch(); }
  std::unique_ptr<autodiff::Evaluation> evaluate(const Tensor& w,
                                                 const autodiff::Batch& batch) const override {
    return std::make_unique<FlippedEvaluation>(inner_.evaluate(w, batch));
  }

 private:
  const autodiff::Problem& inner_;
};

}  // namespace

TEST(Stats, MeanAndSampleStd) {
  const std::vector<double> values = {10, 12, 14};
  EXPECT_EQ(mean(values), 12.0);
  EXPECT_EQ(sample_std(values), 2.0);
  EXPECT_EQ(sample_std(std::vector<double>{5}), 0.0);
  EXPECT_EQ(median(std::vector<double>{3, 1, 2}), 2.0);
  EXPECT_EQ(median(std::vector<double>{4, 1, 3, 2}), 2.5);
}

TEST(Stats, SummaryExcludesFailedRuns) {
  std::vector<RunResult> runs(4);
  runs[0] = {0, true, 10, 0.0, "", {}};
  runs[1] = {1, true, 14, 0.0, "", {}};
  runs[2] = {2, false, 100, 1.0, "", {}};
  runs[3] = {3, true, 12, 0.0, "", {}};
  const Summary summary = summarize(runs);
  EXPECT_EQ(summary.mean_iterations, 12.0);
  EXPECT_EQ(summary.std_iterations, 2.0);
  EXPECT_EQ(summary.converged, 3u);
  EXPECT_EQ(summary.total, 4u);
  EXPECT_EQ(summary.convergence_rate(), 0.75);
}

TEST(Csv, DoublesRoundTripExactly) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const double x = std::ldexp(rng.normal(), static_cast<int>(rng.index(200)) - 100);
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_TRUE(std::isnan(parse_double(format_double(NAN))));
  EXPECT_EQ(parse_double(format_double(INFINITY)), INFINITY);
  EXPECT_EQ(parse_double(format_double(-INFINITY)), -INFINITY);
  EXPECT_THROW(parse_double("1.5x"), IoError);
}

TEST(Csv, QuotingRoundTrips) {
  CsvTable table;
  table.header = {"name", "value"};
  table.rows = {{"sgd(lr=1,momentum=0.9)", "1"}, {"say \"hi\"", "line\nbreak"}};
  const std::string text = to_csv(table);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const CsvTable back = parse_csv(text);
  EXPECT_EQ(back.header, table.header);
  EXPECT_EQ(back.rows, table.rows);
  EXPECT_EQ(back.column("value"), 1u);
}

TEST(Csv, EmptyTraceIsHeaderOnly) {
  const CsvTable table = trace_table({});
  const std::string text = to_csv(table);
  EXPECT_EQ(text, "iteration,loss,noise_free_loss,step_norm,beta,rho,lambda,gamma,wall_ns,"
                  "primal_passes,tangent_passes,reverse_passes\n");
}

TEST(Csv, TraceRoundTrips) {
  RunTrace trace;
  for (std::size_t k = 1; k <= 3; ++k) {
    TraceRow row;
    row.iteration = k;
    row.loss = 1.0 / 3.0 * k;
    row.noise_free_loss = k == 2 ? NAN : 0.1 * k;
    row.step_norm = 1e-300 * k;
    row.beta = -2.5;
    row.rho = 0.9;
    row.lambda = 10.0 * 0.999;
    row.gamma = NAN;
    row.passes = {1, 2, 1};
    trace.push_back(row);
  }
  const RunTrace back = trace_from_table(parse_csv(to_csv(trace_table(trace))));
  ASSERT_EQ(back.size(), trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_EQ(back[i].iteration, trace[i].iteration);
    EXPECT_EQ(back[i].loss, trace[i].loss);
    EXPECT_EQ(std::isnan(back[i].noise_free_loss), std::isnan(trace[i].noise_free_loss));
    EXPECT_EQ(back[i].step_norm, trace[i].step_norm);
    EXPECT_EQ(back[i].lambda, trace[i].lambda);
    EXPECT_EQ(back[i].passes, trace[i].passes);
  }
}

TEST(Csv, WriteToMissingDirectoryFails) {
  EXPECT_THROW(write_csv("/nonexistent/dir/out.csv", CsvTable{{"a"}, {}}), IoError);
}

TEST(Config, DefaultsAndOverrides) {
  const ExperimentConfig config = parse_config(R"({"problem": "rosenbrock", "optimizer": "curveball"})");
  EXPECT_EQ(config.repeats, 100u);
  EXPECT_EQ(config.tolerance, 1e-4);
  EXPECT_EQ(config.max_iterations, 100000u);
  EXPECT_EQ(config.optimizer.name, "curveball");
  EXPECT_TRUE(config.problem.noise.deterministic());

  const ExperimentConfig noisy = parse_config(R"({
    "problem": {"name": "rosenbrock", "noise": [0, 3]},
    "optimizer": {"name": "sgd", "grid": "default"},
    "repeats": 7, "tolerance_mode": "relative", "selection": "final_loss"
  })");
  EXPECT_EQ(noisy.problem.label(), "rosenbrock(U[0,3])");
  EXPECT_EQ(noisy.repeats, 7u);
  EXPECT_EQ(noisy.tolerance_mode, ToleranceMode::kRelative);
  EXPECT_EQ(noisy.selection, Selection::kFinalLoss);
  EXPECT_EQ(noisy.grid.at("lr").size(), 6u);
  EXPECT_EQ(noisy.grid.at("momentum"), (std::vector<double>{0.9, 0.99}));
}

TEST(Config, RejectsInvalidDocuments) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": "rosenbrock", "optimizer": "sgd", "bogus": 1})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": "nope", "optimizer": "sgd"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": "rosenbrock", "optimizer": "nope"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": "rosenbrock", "optimizer": "sgd", "repeats": 0})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": "rosenbrock", "optimizer": "sgd", "tolerance": 0})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": {"name": "rosenbrock", "noise": [3, 0]},
                                "optimizer": "sgd"})"),
               Error);
  EXPECT_THROW(make_problem(parse_config(R"({"problem": {"name": "quadratic", "knob": 1},
                                             "optimizer": "sgd"})")
                                .problem),
               ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

TEST(Config, OutputIsResolvedAgainstConfigDirectory) {
  const fs::path dir = scratch_dir("config");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"problem": "rosenbrock", "optimizer": "sgd", "output": "out"})";
  EXPECT_EQ(load_config(dir / "c.json").output_dir, dir / "out");
  fs::remove_all(dir);
}

TEST(Experiment, RepeatedRunsAreByteIdentical) {
  ExperimentConfig config = quadratic_config();
  config.output_dir = scratch_dir("det_a");
  run_experiment(config);
  const fs::path first = config.output_dir;
  config.output_dir = scratch_dir("det_b");
  run_experiment(config);
  for (const char* file : {"summary.csv", "runs.csv", "traces/run_0000.csv", "traces/run_0003.csv"}) {
    const std::string a = slurp(first / file);
    EXPECT_FALSE(a.empty()) << file;
    EXPECT_EQ(a, slurp(config.output_dir / file)) << file;
  }
  fs::remove_all(first);
  fs::remove_all(config.output_dir);
}

TEST(Experiment, SummaryMatchesPerRunFiles) {
  ExperimentConfig config = quadratic_config();
  config.output_dir = scratch_dir("summary");
  const ExperimentResult result = run_experiment(config);
  const CsvTable summary = read_csv(config.output_dir / "summary.csv");
  EXPECT_EQ(summary.header, (std::vector<std::string>{"optimizer", "problem", "mean_iters",
                                                      "std_iters", "converged", "total"}));
  ASSERT_EQ(summary.rows.size(), 1u);

  std::vector<double> iterations;
  for (std::size_t r = 0; r < config.repeats; ++r) {
    char name[32];
    std::snprintf(name, sizeof name, "traces/run_%04zu.csv", r);
    const RunTrace trace = trace_from_table(read_csv(config.output_dir / name));
    ASSERT_FALSE(trace.empty());
    for (std::size_t i = 0; i < trace.size(); ++i) EXPECT_EQ(trace[i].iteration, i + 1);
    EXPECT_LE(trace.back().noise_free_loss, config.tolerance);
    iterations.push_back(static_cast<double>(trace.size()));
  }
  const auto& row = summary.rows[0];
  EXPECT_EQ(parse_double(row[summary.column("mean_iters")]), mean(iterations));
  EXPECT_EQ(parse_double(row[summary.column("std_iters")]), sample_std(iterations));
  EXPECT_EQ(row[summary.column("converged")], std::to_string(config.repeats));
  EXPECT_EQ(result.summary.mean_iterations, mean(iterations));
  fs::remove_all(config.output_dir);
}

TEST(Experiment, ThreadCapDoesNotChangeResults) {
  const ExperimentConfig config = quadratic_config();
  setenv("CURVEBALL_THREADS", "1", 1);
  const ExperimentResult serial = run_experiment(config);
  unsetenv("CURVEBALL_THREADS");
  const ExperimentResult parallel = run_experiment(config);
  for (std::size_t r = 0; r < config.repeats; ++r) {
    EXPECT_EQ(serial.runs[r].iterations, parallel.runs[r].iterations);
    EXPECT_EQ(serial.runs[r].final_loss, parallel.runs[r].final_loss);
  }
}

TEST(Experiment, NonConvergentRunsAreCountedNotFatal) {
  ExperimentConfig config = quadratic_config();
  config.optimizer.params["lr"] = 10.0;  // diverges
  const ExperimentResult result = run_experiment(config);
  EXPECT_EQ(result.summary.converged, 0u);
  EXPECT_EQ(result.summary.total, config.repeats);
  EXPECT_TRUE(std::isnan(result.summary.mean_iterations));
}

TEST(Experiment, OptimizerErrorsAreRecorded) {
  // The Rosenbrock Hessian is indefinite at the start and no retries are allowed.
  ExperimentConfig config = parse_config(R"({
    "problem": "rosenbrock",
    "optimizer": {"name": "levenberg", "params": {"lambda": 0, "max_retries": 0}},
    "repeats": 1, "max_iterations": 3
  })");
  const ExperimentResult result = run_experiment(config);
  ASSERT_EQ(result.runs.size(), 1u);
  EXPECT_FALSE(result.runs[0].converged);
  EXPECT_FALSE(result.runs[0].error.empty());
}

TEST(Grid, CartesianProduct) {
  const auto points = grid_points({"sgd", {}}, {{"lr", {0.1, 0.01}}, {"momentum", {0.9, 0.99}}});
  EXPECT_EQ(points.size(), 4u);
  for (const auto& p : points) {
    EXPECT_EQ(p.params.size(), 2u);
  }
}

TEST(Grid, SinglePointMatchesRunExperiment) {
  ExperimentConfig config = quadratic_config();
  config.grid = {{"lr", {0.05}}};
  const GridResult grid = grid_search(config);
  ASSERT_EQ(grid.points.size(), 1u);
  const ExperimentResult direct = run_experiment(quadratic_config());
  EXPECT_EQ(grid.best_result().summary.mean_iterations, direct.summary.mean_iterations);
  EXPECT_EQ(grid.best_result().summary.std_iterations, direct.summary.std_iterations);
}

TEST(Grid, DivergentPointIsRejected) {
  ExperimentConfig config = quadratic_config();
  config.optimizer.params.erase("lr");
  config.grid = {{"lr", {1.0, 1e-2}}};
  const GridResult grid = grid_search(config);
  EXPECT_EQ(grid.best_result().spec.params.at("lr"), 1e-2);
}

TEST(Grid, PruningNeverChangesTheSelection) {
  ExperimentConfig config = parse_config(R"({
    "problem": {"name": "rosenbrock", "noise": [0, 1]},
    "optimizer": {"name": "sgd", "grid": {"lr": [1e-4, 5e-4, 1e-3, 2e-3], "momentum": [0.5, 0.9]}},
    "repeats": 10, "max_iterations": 20000, "check_every": 7, "seed": 11
  })");
  const auto problem = make_problem(config.problem);
  const GridResult grid = grid_search(*problem, config);
  const auto specs = grid_points(config.optimizer, config.grid);
  ASSERT_EQ(grid.points.size(), specs.size());

  // Brute force: every point run in full.
  std::optional<std::size_t> best;
  std::vector<Summary> full;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    ExperimentConfig single = config;
    single.optimizer = specs[i];
    single.grid.clear();
    full.push_back(run_experiment(*problem, single).summary);
    const Summary& s = full.back();
    if (s.converged == 0 || s.convergence_rate() < config.min_convergence_rate) continue;
    if (!best || s.mean_iterations < full[*best].mean_iterations) best = i;
  }
  ASSERT_TRUE(best.has_value());
  EXPECT_EQ(grid.best, *best);

  std::size_t pruned = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& point = grid.points[i];
    if (point.pruned) {
      ++pruned;
      EXPECT_NE(i, *best);
      continue;
    }
    EXPECT_EQ(point.summary.converged, full[i].converged) << specs[i].label();
    EXPECT_EQ(point.summary.total, full[i].total) << specs[i].label();
    if (full[i].converged > 0) {
      EXPECT_EQ(point.summary.mean_iterations, full[i].mean_iterations) << specs[i].label();
      EXPECT_EQ(point.summary.std_iterations, full[i].std_iterations) << specs[i].label();
    }
  }
  EXPECT_GT(pruned, 0u);
}

TEST(Grid, TiesGoToSmallerLearningRate) {
  // A huge tolerance makes every point converge before its first step.
  ExperimentConfig config = parse_config(R"({
    "problem": {"name": "quadratic", "dim": 2, "condition": 1},
    "optimizer": {"name": "sgd", "params": {"momentum": 0}},
    "repeats": 2, "tolerance": 1e300
  })");
  config.grid = {{"lr", {0.5, 0.1, 0.2}}};
  const GridResult grid = grid_search(config);
  EXPECT_EQ(grid.best_result().spec.params.at("lr"), 0.1);
}

TEST(Grid, NothingConvergesThrows) {
  ExperimentConfig config = quadratic_config();
  config.optimizer.params.erase("lr");
  config.grid = {{"lr", {10.0, 20.0}}};
  EXPECT_THROW(grid_search(config), NoConvergentSetting);
}

TEST(Cost, PassCountsPerStep) {
  Rng rng(2);
  const auto mlp = testing_support::tiny_mlp(rng);
  CostOptions options;
  options.warmup = 2;
  options.iterations = 20;
  const CostReport report = measure_cost(mlp, {{"sgd", {}}, {"curveball", {}}}, options);
  const CostRow& sgd = report.find("sgd");
  EXPECT_EQ(sgd.mean_primal(), 1.0);
  EXPECT_EQ(sgd.mean_reverse(), 1.0);
  EXPECT_EQ(sgd.mean_tangent(), 0.0);
  const CostRow& cb = report.find("curveball");
  ASSERT_EQ(cb.passes.size(), 20u);
  for (const auto& p : cb.passes) {
    EXPECT_EQ(p.tangent, 2u);
    EXPECT_EQ(p.reverse, 1u);
    EXPECT_GE(p.primal, 1u);
    EXPECT_LE(p.primal, 2u);
  }
  EXPECT_GT(report.ratio("curveball", "sgd"), 0.0);
  const CsvTable table = cost_table(report);
  EXPECT_EQ(table.rows.size(), 2u);
}

TEST(Verify, FreshBuildPassesAllSuites) {
  const VerifyReport report = verify(0);
  EXPECT_TRUE(report.passed()) << report.table();
  EXPECT_GE(report.suites().size(), 6u);
}

TEST(Verify, SignFlippedJvpFailsTheAdjointCheck) {
  Rng rng(3);
  const auto mlp = testing_support::tiny_mlp(rng);
  EXPECT_TRUE(check_adjoint(mlp, rng).passed);
  const FlippedProblem flipped(mlp);
  EXPECT_FALSE(check_adjoint(flipped, rng).passed);
}
