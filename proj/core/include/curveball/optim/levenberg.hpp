#pragma once

#include <cstddef>

#include "curveball/autodiff/problem.hpp"
#include "curveball/numerics/linalg.hpp"
#include "curveball/optim/step.hpp"

namespace curveball::optim {

struct LevenbergOptions {
  double alpha = 1.0;
  /// Multiplicative lambda schedule: accept a step and shrink lambda when the
  /// objective decreases on the step's batch, otherwise reject and grow it.
  bool adaptive = true;
  double decrease = 0.1;
  double increase = 10.0;
  double lambda_min = 1e-12;
  double lambda_max = 1e12;
  int max_retries = 10;
  std::size_t cap = kDefaultDenseCap;
};

struct LevenbergState {
  double lambda = 1e-3;
};

/// dw = -(C + lambda I)^{-1} J; w <- w + alpha dw, where C is the dense
/// curvature (Gauss-Newton or analytic Hessian). When the damped system is
/// not positive definite lambda is multiplied by 10 and the solve retried, up
/// to `max_retries` times before DampingExhausted.
StepInfo levenberg_step(LevenbergState& state, const autodiff::Problem& problem, Tensor& w,
                        const autodiff::Batch& batch, const LevenbergOptions& options = {});

}  // namespace curveball::optim
