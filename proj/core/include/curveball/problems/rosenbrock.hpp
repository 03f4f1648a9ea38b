#pragma once

#include "curveball/autodiff/problem.hpp"

namespace curveball::problems {

/// Multiplicative noise range: each evaluation draws eps ~ U[lo, hi].
/// (1, 1) is the deterministic function.
struct NoiseSpec {
  double lo = 1.0;
  double hi = 1.0;

  void validate() const;
  bool deterministic() const { return lo == 1.0 && hi == 1.0; }
};

/// R(u, v) = (1 - u)^2 + 100 eps (v - u^2)^2
double rosenbrock(double u, double v, double eps);
Tensor rosenbrock_gradient(double u, double v, double eps);
Tensor rosenbrock_hessian(double u, double v, double eps);

/// Stochastic Rosenbrock: one eps per evaluation, carried in Batch::noise
/// and shared by the value, gradient and Hessian of that evaluation.
/// The reference (noise-free) objective uses eps = 1. Curvature is the
/// analytic Hessian.
class RosenbrockProblem final : public autodiff::Problem {
 public:
  explicit RosenbrockProblem(NoiseSpec noise = {}, Tensor start = Tensor::vector({-0.5, 1.5}));

  std::string name() const override { return "rosenbrock"; }
  std::size_t parameter_count() const override { return 2; }
  std::size_t output_count() const override { return 1; }
  autodiff::LossKind loss_kind() const override { return autodiff::LossKind::kRawScalar; }

  Tensor initial_point(Rng& rng) const override;
  autodiff::Batch sample_batch(Rng& rng) const override;
  autodiff::Batch reference_batch() const override { return {{}, 1.0}; }
  /// The valley curvature is ~0.4 near the minimum, so lambda = 10 would
  /// reduce the method to slow gradient steps along it.
  std::optional<double> initial_damping() const override { return 0.1; }
  std::unique_ptr<autodiff::Evaluation> evaluate(const Tensor& w,
                                                 const autodiff::Batch& batch) const override;

  const NoiseSpec& noise() const { return noise_; }

 private:
  NoiseSpec noise_;
  Tensor start_;
};

}  // namespace curveball::problems
