#pragma once

#include <cstddef>

#include "curveball/autodiff/problem.hpp"

namespace curveball::autodiff {

/// J_phi u: output-space vector to parameter space (reverse mode).
Tensor vjp(const Problem& problem, const Tensor& w, const Batch& batch, const Tensor& u);

/// J_phi^T v: parameter direction to output space (forward mode).
Tensor jvp(const Problem& problem, const Tensor& w, const Batch& batch, const Tensor& v);

struct HvpResult {
  Tensor product;            ///< J_phi H_L J_phi^T v
  Tensor output_projection;  ///< J_phi^T v
};

/// Gauss-Newton Hessian-vector product with exactly one forward-mode and one
/// reverse-mode pass. Throws UnsupportedLoss for raw scalar problems.
HvpResult gauss_newton_hvp(const Evaluation& evaluation, const Tensor& v);
HvpResult gauss_newton_hvp(const Problem& problem, const Tensor& w, const Batch& batch,
                           const Tensor& v);

inline constexpr std::size_t kOracleHessianCap = 500;

/// Hessian of f by central differences of the gradient, with step
/// h = 1e-5 (1 + |w|_inf). Throws TooLarge when p > cap.
Tensor full_hessian(const Problem& problem, const Tensor& w, const Batch& batch,
                    std::size_t cap = kOracleHessianCap);

}  // namespace curveball::autodiff
