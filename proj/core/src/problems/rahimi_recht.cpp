#include "curveball/problems/rahimi_recht.hpp"

#include <cmath>

#include "curveball/errors.hpp"
#include "curveball/numerics/linalg.hpp"

namespace curveball::problems {

namespace {

Tensor gather_rows(const Tensor& matrix, const std::vector<std::size_t>& rows) {
  const std::size_t cols = matrix.cols();
  Tensor out({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = matrix(rows[i], j);
  return out;
}

double rectangular_condition(const Tensor& a) {
  const Tensor gram = a.rows() >= a.cols() ? matmul(transpose(a), a) : matmul(a, transpose(a));
  const auto range = eigen_range_spd(gram, 2000);
  return std::sqrt(range.largest / range.smallest);
}

}  // namespace

LinearNetProblem::LinearNetProblem(RahimiRechtOptions options, Tensor target_map, Tensor inputs)
    : options_(options), target_map_(std::move(target_map)), inputs_(std::move(inputs)) {
  if (options_.d_in == 0 || options_.hidden == 0 || options_.d_out == 0 || options_.samples == 0) {
    throw InvalidDim("rahimi_recht: dimensions must be positive");
  }
  if (target_map_.rank() != 2 || target_map_.rows() != options_.d_out ||
      target_map_.cols() != options_.d_in) {
    throw ShapeMismatch("rahimi_recht: target map has shape " + shape_string(target_map_.shape()));
  }
  if (inputs_.rank() != 2 || inputs_.rows() != options_.samples ||
      inputs_.cols() != options_.d_in) {
    throw ShapeMismatch("rahimi_recht: inputs have shape " + shape_string(inputs_.shape()));
  }
  targets_ = matmul(inputs_, transpose(target_map_));
  condition_ = rectangular_condition(target_map_);
}

std::size_t LinearNetProblem::parameter_count() const {
  return options_.hidden * options_.d_in + options_.d_out * options_.hidden;
}

Tensor LinearNetProblem::initial_point(Rng& rng) const {
  Tensor w({parameter_count()});
  const std::size_t first = options_.hidden * options_.d_in;
  const double s1 = 1.0 / std::sqrt(static_cast<double>(options_.d_in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(options_.hidden));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal() * (i < first ? s1 : s2);
  return w;
}

autodiff::Batch LinearNetProblem::sample_batch(Rng& rng) const {
  if (options_.batch_size == 0 || options_.batch_size >= options_.samples) {
    return reference_batch();
  }
  autodiff::Batch batch;
  batch.rows.resize(options_.batch_size);
  for (auto& row : batch.rows) row = rng.index(options_.samples);
  return batch;
}

autodiff::Batch LinearNetProblem::reference_batch() const {
  autodiff::Batch batch;
  batch.rows.resize(options_.samples);
  for (std::size_t i = 0; i < options_.samples; ++i) batch.rows[i] = i;
  return batch;
}

autodiff::TapeProblem::Graph LinearNetProblem::record(autodiff::Tape& tape,
                                                      const autodiff::Batch& batch) const {
  if (batch.rows.empty()) throw InvalidDim("rahimi_recht: empty batch");
  const std::size_t n = batch.rows.size();
  const auto w1 = tape.param(0, {options_.hidden, options_.d_in});
  const auto w2 = tape.param(options_.hidden * options_.d_in, {options_.d_out, options_.hidden});
  const auto x = tape.constant(gather_rows(inputs_, batch.rows));
  const auto y = tape.constant(gather_rows(targets_, batch.rows));
  const auto hidden = tape.affine(x, w1, autodiff::Tape::kNone);
  const auto out = tape.affine(hidden, w2, autodiff::Tape::kNone);
  const auto loss =
      tape.scale(tape.sum(tape.square(tape.sub(out, y))), 1.0 / static_cast<double>(n));
  return {out, loss};
}

Tensor LinearNetProblem::pack(const Tensor& w1, const Tensor& w2) const {
  if (w1.size() != options_.hidden * options_.d_in ||
      w2.size() != options_.d_out * options_.hidden) {
    throw ShapeMismatch("rahimi_recht: pack size mismatch");
  }
  Tensor w({parameter_count()});
  std::size_t k = 0;
  for (double x : w1) w[k++] = x;
  for (double x : w2) w[k++] = x;
  return w;
}

LinearNetProblem make_rahimi_recht(const RahimiRechtOptions& options, Rng& rng) {
  if (options.d_in == 0 || options.hidden == 0 || options.d_out == 0 || options.samples == 0) {
    throw InvalidDim("rahimi_recht: dimensions must be positive");
  }
  if (!(options.kappa >= 1.0)) throw InvalidDim("rahimi_recht: kappa must be >= 1");

  const std::size_t rank = std::min(options.d_in, options.d_out);
  const Tensor u = random_orthogonal(options.d_out, rng);
  const Tensor v = random_orthogonal(options.d_in, rng);
  const double lo = -0.5 * std::log(options.kappa);
  const double hi = 0.5 * std::log(options.kappa);
  Tensor a({options.d_out, options.d_in});
  for (std::size_t k = 0; k < rank; ++k) {
    const double t = rank == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(rank - 1);
    const double sigma = rank == 1 ? 1.0 : std::exp(lo + (hi - lo) * t);
    for (std::size_t i = 0; i < options.d_out; ++i)
      for (std::size_t j = 0; j < options.d_in; ++j) a(i, j) += sigma * u(i, k) * v(j, k);
  }

  Tensor x({options.samples, options.d_in});
  for (double& value : x) value = rng.normal();

  LinearNetProblem problem(options, std::move(a), std::move(x));
  const double measured = problem.condition();
  if (std::abs(measured - options.kappa) > 0.01 * options.kappa) {
    throw Error("rahimi_recht: constructed condition number " + std::to_string(measured) +
                " is not within 1% of " + std::to_string(options.kappa));
  }
  return problem;
}

}  // namespace curveball::problems
