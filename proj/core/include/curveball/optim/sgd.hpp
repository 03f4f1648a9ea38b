#pragma once

#include "curveball/autodiff/problem.hpp"
#include "curveball/optim/step.hpp"

namespace curveball::optim {

struct SgdState {
  Tensor z;  ///< velocity

  static SgdState zeros(std::size_t p) { return {Tensor({p})}; }
};

/// Heavy ball: z <- rho z - J(w); w <- w + alpha z.
StepInfo sgd_momentum_step(SgdState& state, const autodiff::Evaluation& evaluation, Tensor& w,
                           double alpha, double rho);
StepInfo sgd_momentum_step(SgdState& state, const autodiff::Problem& problem, Tensor& w,
                           const autodiff::Batch& batch, double alpha, double rho);

}  // namespace curveball::optim
