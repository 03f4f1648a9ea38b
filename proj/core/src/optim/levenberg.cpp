#include "curveball/optim/levenberg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curveball/errors.hpp"

namespace curveball::optim {

StepInfo levenberg_step(LevenbergState& state, const autodiff::Problem& problem, Tensor& w,
                        const autodiff::Batch& batch, const LevenbergOptions& options) {
  const std::size_t p = w.size();
  if (p > options.cap) {
    throw TooLarge("levenberg: p=" + std::to_string(p) + " exceeds dense cap");
  }
  const auto evaluation = problem.evaluate(w, batch);
  const Tensor gradient = evaluation->gradient();
  const Tensor curvature = evaluation->curvature_matrix();

  double diagonal_scale = 1.0;
  for (std::size_t i = 0; i < p; ++i) {
    diagonal_scale = std::max(diagonal_scale, std::abs(curvature(i, i)));
  }

  Tensor direction;
  for (int attempt = 0;; ++attempt) {
    Tensor damped = curvature;
    for (std::size_t i = 0; i < p; ++i) damped(i, i) += state.lambda;
    try {
      direction = -symmetric_solve(damped, gradient, options.cap);
      break;
    } catch (const NotPositiveDefinite&) {
      if (attempt >= options.max_retries) {
        throw DampingExhausted("levenberg: damped curvature not positive definite after " +
                               std::to_string(options.max_retries) + " retries");
      }
      state.lambda = state.lambda > 0.0 ? state.lambda * 10.0 : 1e-6 * diagonal_scale;
    }
  }

  StepInfo info;
  info.loss = evaluation->loss();
  info.lambda = state.lambda;

  Tensor candidate = w;
  axpy(options.alpha, direction, candidate);
  if (options.adaptive) {
    const double trial = problem.loss(candidate, batch);
    if (std::isfinite(trial) && trial <= info.loss) {
      state.lambda = std::max(options.lambda_min, state.lambda * options.decrease);
    } else {
      state.lambda = std::min(options.lambda_max, state.lambda * options.increase);
      info.rejected = true;
      return info;
    }
  }
  info.step_norm = options.alpha * norm(direction);
  w = std::move(candidate);
  return info;
}

}  // namespace curveball::optim
