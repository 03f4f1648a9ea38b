#pragma once

#include <cstdint>

#include "curveball/autodiff/problem.hpp"
#include "curveball/optim/step.hpp"

namespace curveball::optim {

struct AdamOptions {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Tensor first;
  Tensor second;
  std::uint64_t t = 0;

  static AdamState zeros(std::size_t p) { return {Tensor({p}), Tensor({p}), 0}; }
};

/// Adam with bias correction.
StepInfo adam_step(AdamState& state, const autodiff::Evaluation& evaluation, Tensor& w,
                   const AdamOptions& options);
StepInfo adam_step(AdamState& state, const autodiff::Problem& problem, Tensor& w,
                   const autodiff::Batch& batch, const AdamOptions& options);

/// Applies one Adam update for a given gradient (no evaluation).
void adam_update(AdamState& state, const Tensor& gradient, Tensor& w, const AdamOptions& options);

}  // namespace curveball::optim
