#pragma once

#include "curveball/autodiff/evaluation.hpp"

namespace curveball::problems {

/// phi(w) = A w with squared-distance loss |A w - y|^2 (single sample).
/// The simplest Gauss-Newton problem: J_phi^T v = A v, C = 2 A^T A.
class LinearMapProblem final : public autodiff::TapeProblem {
 public:
  LinearMapProblem(Tensor matrix, Tensor target);

  std::string name() const override { return "linear_map"; }
  std::size_t parameter_count() const override { return matrix_.cols(); }
  std::size_t output_count() const override { return matrix_.rows(); }
  autodiff::LossKind loss_kind() const override {
    return autodiff::LossKind::kSquaredDistance;
  }

  Tensor initial_point(Rng& rng) const override;
  autodiff::Batch sample_batch(Rng&) const override { return {}; }
  autodiff::Batch reference_batch() const override { return {}; }
  Graph record(autodiff::Tape& tape, const autodiff::Batch& batch) const override;

 private:
  Tensor matrix_;
  Tensor target_;
};

}  // namespace curveball::problems
