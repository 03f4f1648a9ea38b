#include "curveball/problems/linear_map.hpp"

#include "curveball/errors.hpp"

namespace curveball::problems {

LinearMapProblem::LinearMapProblem(Tensor matrix, Tensor target)
    : matrix_(std::move(matrix)), target_(std::move(target)) {
  if (matrix_.rank() != 2) throw ShapeMismatch("linear_map: matrix expected");
  if (target_.size() != matrix_.rows()) throw ShapeMismatch("linear_map: target length mismatch");
  target_ = target_.reshaped({1, matrix_.rows()});
}

Tensor LinearMapProblem::initial_point(Rng& rng) const {
  Tensor w({matrix_.cols()});
  for (double& x : w) x = rng.normal();
  return w;
}

autodiff::TapeProblem::Graph LinearMapProblem::record(autodiff::Tape& tape,
                                                      const autodiff::Batch&) const {
  const auto w = tape.param(0, {1, matrix_.cols()});
  const auto a = tape.constant(matrix_);
  const auto out = tape.affine(w, a, autodiff::Tape::kNone);
  const auto residual = tape.sub(out, tape.constant(target_));
  const auto loss = tape.sum(tape.square(residual));
  return {out, loss};
}

}  // namespace curveball::problems
