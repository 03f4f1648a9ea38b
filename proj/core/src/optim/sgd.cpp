#include "curveball/optim/sgd.hpp"

#include <cmath>

#include "curveball/errors.hpp"

namespace curveball::optim {

StepInfo sgd_momentum_step(SgdState& state, const autodiff::Evaluation& evaluation, Tensor& w,
                           double alpha, double rho) {
  if (state.z.size() != w.size()) throw ShapeMismatch("sgd: state does not match parameters");
  const Tensor gradient = evaluation.gradient();
  double moved = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    state.z[i] = rho * state.z[i] - gradient[i];
    const double step = alpha * state.z[i];
    w[i] += step;
    moved += step * step;
  }
  StepInfo info;
  info.loss = evaluation.loss();
  info.step_norm = std::sqrt(moved);
  info.beta = alpha;
  info.rho = rho;
  return info;
}

StepInfo sgd_momentum_step(SgdState& state, const autodiff::Problem& problem, Tensor& w,
                           const autodiff::Batch& batch, double alpha, double rho) {
  const auto evaluation = problem.evaluate(w, batch);
  return sgd_momentum_step(state, *evaluation, w, alpha, rho);
}

}  // namespace curveball::optim
