#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include "curveball/autodiff/problem.hpp"
#include "curveball/numerics/linalg.hpp"
#include "curveball/optim/step.hpp"

namespace curveball::optim {

struct BfgsOptions {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_evaluations = 25;
  double initial_step = 1.0;
  /// Update skipped unless s^T y > curvature_tolerance |s| |y|.
  double curvature_tolerance = 1e-10;
  std::size_t cap = kDefaultDenseCap;
};

struct BfgsState {
  Tensor inverse_hessian;  ///< B, symmetric p x p
  std::size_t updates = 0;
  std::size_t skipped = 0;

  static BfgsState identity(std::size_t p);
  void reset();
};

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  Tensor gradient;
  int evaluations = 0;
};

/// Objective and gradient at w + step * d.
using LineFunction = std::function<std::pair<double, Tensor>(double step)>;

/// Strong Wolfe line search with cubic interpolation in the zoom phase.
/// `value0` and `slope0` are f and f' at step 0.
///
/// When the budget runs out, the best point satisfying sufficient decrease
/// is returned; LineSearchFailed is thrown when there is none, or when d is
/// not a descent direction.
LineSearchResult strong_wolfe_search(const LineFunction& phi, double value0, double slope0,
                                     const Tensor& direction, const BfgsOptions& options);

/// Minimiser of the cubic interpolating (a, fa, da) and (b, fb, db);
/// bisection when the cubic has no real minimiser.
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db);

/// d = -B J, strong Wolfe step, inverse BFGS update of B. When `resample` is
/// given, each line-search trial evaluates the objective on a fresh batch.
StepInfo bfgs_step(BfgsState& state, const autodiff::Problem& problem, Tensor& w,
                   const autodiff::Batch& batch, const BfgsOptions& options = {},
                   Rng* resample = nullptr);

/// In-place inverse BFGS update. Returns false (and leaves B) when the
/// curvature condition fails.
bool bfgs_update(Tensor& inverse_hessian, const Tensor& s, const Tensor& y, double tolerance);

}  // namespace curveball::optim
