#pragma once

#include <cstddef>

#include "curveball/autodiff/evaluation.hpp"

namespace curveball::problems {

struct RahimiRechtOptions {
  std::size_t d_in = 10;
  std::size_t hidden = 10;
  std::size_t d_out = 10;
  std::size_t samples = 1000;
  double kappa = 1e5;
  /// 0 means full batch.
  std::size_t batch_size = 0;
};

/// Two linear layers W2 W1 x fitted to y = A x with an ill-conditioned A.
///
/// Parameters are laid out as [W1 (hidden x d_in), W2 (d_out x hidden)],
/// row-major. The loss is the batch mean of |W2 W1 x - A x|^2.
class LinearNetProblem final : public autodiff::TapeProblem {
 public:
  LinearNetProblem(RahimiRechtOptions options, Tensor target_map, Tensor inputs);

  std::string name() const override { return "rahimi_recht"; }
  std::size_t parameter_count() const override;
  std::size_t output_count() const override { return options_.d_out; }
  autodiff::LossKind loss_kind() const override {
    return autodiff::LossKind::kSquaredDistance;
  }

  /// W ~ N(0, 1/fan_in) per layer.
  Tensor initial_point(Rng& rng) const override;
  autodiff::Batch sample_batch(Rng& rng) const override;
  autodiff::Batch reference_batch() const override;
  Graph record(autodiff::Tape& tape, const autodiff::Batch& batch) const override;

  /// Packs (W1, W2) into a parameter vector.
  Tensor pack(const Tensor& w1, const Tensor& w2) const;

  const RahimiRechtOptions& options() const { return options_; }
  const Tensor& target_map() const { return target_map_; }
  const Tensor& inputs() const { return inputs_; }
  const Tensor& targets() const { return targets_; }
  /// Condition number of A as measured at construction.
  double condition() const { return condition_; }

 private:
  RahimiRechtOptions options_;
  Tensor target_map_;
  Tensor inputs_;
  Tensor targets_;
  double condition_;
};

/// A = U diag(s) V^T with s log-spaced over [1/sqrt(kappa), sqrt(kappa)]
/// and random orthogonal U, V. Inputs are standard normal, targets Y = X A^T.
/// Throws InvalidDim for zero dimensions or kappa < 1.
LinearNetProblem make_rahimi_recht(const RahimiRechtOptions& options, Rng& rng);

}  // namespace curveball::problems
