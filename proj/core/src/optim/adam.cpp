#include "curveball/optim/adam.hpp"

#include <cmath>

#include "curveball/errors.hpp"

namespace curveball::optim {

void adam_update(AdamState& state, const Tensor& gradient, Tensor& w, const AdamOptions& options) {
  if (state.first.size() != w.size() || gradient.size() != w.size()) {
    throw ShapeMismatch("adam: state does not match parameters");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double g = gradient[i];
    state.first[i] = options.beta1 * state.first[i] + (1.0 - options.beta1) * g;
    state.second[i] = options.beta2 * state.second[i] + (1.0 - options.beta2) * g * g;
    const double m_hat = state.first[i] / correction1;
    const double v_hat = state.second[i] / correction2;
    w[i] -= options.alpha * m_hat / (std::sqrt(v_hat) + options.eps);
  }
}

StepInfo adam_step(AdamState& state, const autodiff::Evaluation& evaluation, Tensor& w,
                   const AdamOptions& options) {
  const Tensor before = w;
  adam_update(state, evaluation.gradient(), w, options);
  StepInfo info;
  info.loss = evaluation.loss();
  info.step_norm = norm(w - before);
  info.beta = options.alpha;
  return info;
}

StepInfo adam_step(AdamState& state, const autodiff::Problem& problem, Tensor& w,
                   const autodiff::Batch& batch, const AdamOptions& options) {
  const auto evaluation = problem.evaluate(w, batch);
  return adam_step(state, *evaluation, w, options);
}

}  // namespace curveball::optim
