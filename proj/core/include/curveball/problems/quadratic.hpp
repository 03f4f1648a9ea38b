#pragma once

#include <optional>

#include "curveball/autodiff/problem.hpp"

namespace curveball::problems {

/// f(w) = 1/2 (w - w*)^T A (w - w*), so f* = 0. Deterministic, exact Hessian A.
class QuadraticProblem final : public autodiff::Problem {
 public:
  /// `start` empty means a standard normal start point per run.
  QuadraticProblem(Tensor hessian, Tensor minimizer, std::optional<Tensor> start = std::nullopt);

  std::string name() const override { return "quadratic"; }
  std::size_t parameter_count() const override { return minimizer_.size(); }
  std::size_t output_count() const override { return 1; }
  autodiff::LossKind loss_kind() const override { return autodiff::LossKind::kRawScalar; }

  Tensor initial_point(Rng& rng) const override;
  autodiff::Batch sample_batch(Rng&) const override { return {}; }
  autodiff::Batch reference_batch() const override { return {}; }
  std::unique_ptr<autodiff::Evaluation> evaluate(const Tensor& w,
                                                 const autodiff::Batch& batch) const override;

  const Tensor& hessian() const { return hessian_; }
  const Tensor& minimizer() const { return minimizer_; }

 private:
  Tensor hessian_;
  Tensor minimizer_;
  std::optional<Tensor> start_;
};

/// Random SPD quadratic with eigenvalues log-spaced in [1, condition] and a
/// standard normal minimizer.
QuadraticProblem make_random_quadratic(std::size_t p, double condition, Rng& rng);

}  // namespace curveball::problems
