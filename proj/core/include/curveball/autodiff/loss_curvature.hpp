#pragma once

#include <cstddef>

#include "curveball/numerics/tensor.hpp"

namespace curveball::autodiff {

enum class LossKind { kSquaredDistance, kSoftmaxCrossEntropy, kRawScalar };

const char* loss_kind_name(LossKind kind);

/// Closed-form Hessian of the loss w.r.t. the model outputs, for a whole
/// minibatch of n rows. Losses are means over the batch, so products carry
/// a 1/n factor:
///
///   squared distance  H_L u = (2/n) u
///   softmax + xent    H_L u = (1/n) (p .* u - p (p^T u))   (row-wise)
class LossCurvature {
 public:
  /// `batch` rows; for a single sample pass 1.
  static LossCurvature squared_distance(std::size_t batch);
  /// `probabilities` is the n x c softmax output.
  static LossCurvature softmax(Tensor probabilities);
  static LossCurvature raw_scalar();

  LossKind kind() const { return kind_; }
  const Tensor& probabilities() const { return probabilities_; }
  std::size_t batch() const { return batch_; }

  /// H_L u. Throws UnsupportedLoss for raw scalar objectives.
  Tensor apply(const Tensor& u) const;
  /// a^T H_L b without materialising H_L b.
  double inner(const Tensor& a, const Tensor& b) const;

 private:
  LossCurvature(LossKind kind, std::size_t batch, Tensor probabilities)
      : kind_(kind), batch_(batch), probabilities_(std::move(probabilities)) {}

  LossKind kind_;
  std::size_t batch_;
  Tensor probabilities_;
};

/// Free-function form: H_L u.
Tensor loss_hessian_product(const LossCurvature& curvature, const Tensor& u);

}  // namespace curveball::autodiff
