#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "curveball/autodiff/evaluation.hpp"
#include "curveball/problems/dataset.hpp"

namespace curveball::problems {

enum class Activation { kTanh, kRelu };

Activation parse_activation(const std::string& name);
const char* activation_name(Activation activation);

/// Fully connected classifier with softmax cross-entropy loss.
///
/// `layer_sizes` = [input, hidden..., classes]. The activation follows every
/// layer except the last. Parameters are [W1, b1, W2, b2, ...] with W stored
/// as (out x in).
class MlpProblem final : public autodiff::TapeProblem {
 public:
  MlpProblem(std::vector<std::size_t> layer_sizes, Activation activation, Dataset data,
             std::size_t batch_size);

  std::string name() const override { return "mlp"; }
  std::size_t parameter_count() const override { return parameter_count_; }
  std::size_t output_count() const override { return layer_sizes_.back(); }
  autodiff::LossKind loss_kind() const override {
    return autodiff::LossKind::kSoftmaxCrossEntropy;
  }

  /// W ~ N(0, 1/fan_in), b = 0.
  Tensor initial_point(Rng& rng) const override;
  /// `batch_size` rows drawn uniformly with replacement; full data when
  /// batch_size is 0 or covers the dataset.
  autodiff::Batch sample_batch(Rng& rng) const override;
  autodiff::Batch reference_batch() const override;
  Graph record(autodiff::Tape& tape, const autodiff::Batch& batch) const override;

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  const Dataset& data() const { return data_; }
  Activation activation() const { return activation_; }

  /// Fraction of rows whose argmax logit equals the label, at parameters w.
  double accuracy(const Tensor& w) const;

 private:
  std::vector<std::size_t> layer_sizes_;
  Activation activation_;
  Dataset data_;
  std::size_t batch_size_;
  std::size_t parameter_count_;
};

/// Validates sizes against the data (input width and class count).
/// Throws InvalidDim.
MlpProblem make_mlp(std::vector<std::size_t> layer_sizes, Activation activation, Dataset data,
                    std::size_t batch_size = 0);

}  // namespace curveball::problems
