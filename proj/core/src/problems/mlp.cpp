#include "curveball/problems/mlp.hpp"

#include <cmath>
#include <string>

#include "curveball/errors.hpp"

namespace curveball::problems {

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + name + "'");
}

const char* activation_name(Activation activation) {
  return activation == Activation::kTanh ? "tanh" : "relu";
}

MlpProblem::MlpProblem(std::vector<std::size_t> layer_sizes, Activation activation, Dataset data,
                       std::size_t batch_size)
    : layer_sizes_(std::move(layer_sizes)),
      activation_(activation),
      data_(std::move(data)),
      batch_size_(batch_size),
      parameter_count_(0) {
  if (layer_sizes_.size() < 2) throw InvalidDim("mlp: need at least input and output sizes");
  for (std::size_t size : layer_sizes_) {
    if (size == 0) throw InvalidDim("mlp: layer sizes must be positive");
  }
  data_.validate();
  if (data_.size() == 0) throw InvalidDim("mlp: empty dataset");
  if (data_.dimension() != layer_sizes_.front()) {
    throw InvalidDim("mlp: input width " + std::to_string(layer_sizes_.front()) +
                     " does not match data dimension " + std::to_string(data_.dimension()));
  }
  if (data_.classes != layer_sizes_.back()) {
    throw InvalidDim("mlp: output width " + std::to_string(layer_sizes_.back()) +
                     " does not match " + std::to_string(data_.classes) + " classes");
  }
  for (std::size_t l = 1; l < layer_sizes_.size(); ++l) {
    parameter_count_ += layer_sizes_[l] * layer_sizes_[l - 1] + layer_sizes_[l];
  }
}

Tensor MlpProblem::initial_point(Rng& rng) const {
  Tensor w({parameter_count_});
  std::size_t offset = 0;
  for (std::size_t l = 1; l < layer_sizes_.size(); ++l) {
    const std::size_t fan_in = layer_sizes_[l - 1];
    const std::size_t weights = layer_sizes_[l] * fan_in;
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < weights; ++i) w[offset + i] = scale * rng.normal();
    offset += weights + layer_sizes_[l];
  }
  return w;
}

autodiff::Batch MlpProblem::sample_batch(Rng& rng) const {
  if (batch_size_ == 0 || batch_size_ >= data_.size()) return reference_batch();
  autodiff::Batch batch;
  batch.rows.resize(batch_size_);
  for (auto& row : batch.rows) row = rng.index(data_.size());
  return batch;
}

autodiff::Batch MlpProblem::reference_batch() const {
  autodiff::Batch batch;
  batch.rows.resize(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) batch.rows[i] = i;
  return batch;
}

autodiff::TapeProblem::Graph MlpProblem::record(autodiff::Tape& tape,
                                                const autodiff::Batch& batch) const {
  if (batch.rows.empty()) throw InvalidDim("mlp: empty batch");
  const std::size_t n = batch.rows.size();
  const std::size_t d = data_.dimension();
  Tensor x({n, d});
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = batch.rows[i];
    for (std::size_t j = 0; j < d; ++j) x(i, j) = data_.features(row, j);
    labels[i] = data_.labels[row];
  }

  auto h = tape.constant(std::move(x));
  std::size_t offset = 0;
  for (std::size_t l = 1; l < layer_sizes_.size(); ++l) {
    const std::size_t in = layer_sizes_[l - 1], out = layer_sizes_[l];
    const auto weight = tape.param(offset, {out, in});
    offset += out * in;
    const auto bias = tape.param(offset, {out});
    offset += out;
    h = tape.affine(h, weight, bias);
    if (l + 1 < layer_sizes_.size()) {
      h = activation_ == Activation::kTanh ? tape.tanh(h) : tape.relu(h);
    }
  }
  const auto loss = tape.softmax_cross_entropy(h, std::move(labels));
  return {h, loss};
}

double MlpProblem::accuracy(const Tensor& w) const {
  const auto evaluation = evaluate(w, reference_batch());
  const Tensor& logits = evaluation->outputs();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    if (best == data_.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

MlpProblem make_mlp(std::vector<std::size_t> layer_sizes, Activation activation, Dataset data,
                    std::size_t batch_size) {
  return MlpProblem(std::move(layer_sizes), activation, std::move(data), batch_size);
}

}  // namespace curveball::problems
