#pragma once

#include <map>
#include <memory>
#include <string>

#include "curveball/autodiff/problem.hpp"
#include "curveball/optim/adam.hpp"
#include "curveball/optim/bfgs.hpp"
#include "curveball/optim/curveball.hpp"
#include "curveball/optim/levenberg.hpp"
#include "curveball/optim/sgd.hpp"

namespace curveball::optim {

/// Optimizer name plus numeric hyperparameters, e.g. {"sgd", {{"lr", 1e-3}, {"momentum", 0.9}}}.
struct OptimizerSpec {
  std::string name;
  std::map<std::string, double> params;

  /// "sgd(lr=0.001,momentum=0.9)"
  std::string label() const;
};

/// Stateful stepping interface shared by all optimizers. Each step samples
/// its own batch from `rng`, so two optimizers driven by equal rng streams
/// see the same batches.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual std::string name() const = 0;
  /// Clears state for a run starting at w0.
  virtual void reset(const autodiff::Problem& problem, const Tensor& w0) = 0;
  virtual StepInfo step(const autodiff::Problem& problem, Tensor& w, Rng& rng) = 0;
};

class SgdOptimizer final : public Optimizer {
 public:
  SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {}
  std::string name() const override { return "sgd"; }
  void reset(const autodiff::Problem& problem, const Tensor& w0) override;
  StepInfo step(const autodiff::Problem& problem, Tensor& w, Rng& rng) override;

 private:
  double lr_;
  double momentum_;
  SgdState state_;
};

class AdamOptimizer final : public Optimizer {
 public:
  explicit AdamOptimizer(AdamOptions options) : options_(options) {}
  std::string name() const override { return "adam"; }
  void reset(const autodiff::Problem& problem, const Tensor& w0) override;
  StepInfo step(const autodiff::Problem& problem, Tensor& w, Rng& rng) override;

 private:
  AdamOptions options_;
  AdamState state_;
};

class LevenbergOptimizer final : public Optimizer {
 public:
  LevenbergOptimizer(double lambda_init, LevenbergOptions options)
      : lambda_init_(lambda_init), options_(options) {}
  std::string name() const override { return "levenberg"; }
  void reset(const autodiff::Problem& problem, const Tensor& w0) override;
  StepInfo step(const autodiff::Problem& problem, Tensor& w, Rng& rng) override;

 private:
  double lambda_init_;
  LevenbergOptions options_;
  LevenbergState state_;
};

/// On LineSearchFailed the step is recorded as rejected and B reset to I.
class BfgsOptimizer final : public Optimizer {
 public:
  explicit BfgsOptimizer(BfgsOptions options) : options_(options) {}
  std::string name() const override { return "bfgs"; }
  void reset(const autodiff::Problem& problem, const Tensor& w0) override;
  StepInfo step(const autodiff::Problem& problem, Tensor& w, Rng& rng) override;

  const BfgsState& state() const { return state_; }

 private:
  BfgsOptions options_;
  BfgsState state_;
};

class CurveballOptimizer final : public Optimizer {
 public:
  explicit CurveballOptimizer(CurveballOptions options) : options_(options) {}
  std::string name() const override { return "curveball"; }
  void reset(const autodiff::Problem& problem, const Tensor& w0) override;
  StepInfo step(const autodiff::Problem& problem, Tensor& w, Rng& rng) override;

  const CurveballState& state() const { return state_; }
  const CurveballOptions& options() const { return options_; }

 private:
  CurveballOptions options_;
  CurveballState state_;
};

/// Builds an optimizer from a spec. Throws ConfigError for unknown names or
/// parameters.
///
/// sgd:       lr, momentum
/// adam:      lr, beta1, beta2, eps
/// levenberg: lambda, alpha, adaptive (0/1), max_retries
/// bfgs:      c1, c2, max_evals, initial_step
/// curveball: lambda, lambda_min, lambda_max, lambda_factor, lambda_interval,
///            adapt_lambda, alpha, beta, rho (both fix the hyperparameters),
///            auto (0/1), damped_hyper (0/1), beta_default, zero_curvature (0/1)
std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec);

}  // namespace curveball::optim
