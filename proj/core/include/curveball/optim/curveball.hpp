#pragma once

#include <cstddef>

#include "curveball/autodiff/problem.hpp"
#include "curveball/optim/step.hpp"

namespace curveball::optim {

struct CurveballOptions {
  double lambda_init = 10.0;
  /// Let Problem::initial_damping() override lambda_init.
  bool problem_damping = true;
  double lambda_min = 1e-8;
  double lambda_max = 1e10;
  /// lambda *= factor when gamma > gamma_high, lambda /= factor when gamma < gamma_low.
  double lambda_factor = 0.999;
  double gamma_high = 1.5;
  double gamma_low = 0.5;
  std::size_t lambda_interval = 5;
  bool adapt_lambda = true;

  double alpha = 1.0;
  /// Closed-form (beta, rho) each step; otherwise the fixed values below.
  bool auto_hyper = true;
  double beta = 1.0;
  double rho = 0.9;
  /// Include lambda I in the 2x2 system, consistent with the damped residual.
  bool damped_hyper = true;
  /// Step size used when the 2x2 system and its 1-D fallback are degenerate.
  double beta_default = 1e-3;
  /// Drop the curvature term from the residual (heavy-ball mode, for testing).
  bool zero_curvature = false;
};

struct AutoHyper {
  double beta = 0.0;
  double rho = 0.0;
  bool fallback = false;
};

struct CurveballState {
  Tensor z;
  double lambda = 10.0;
  double alpha = 1.0;
  std::size_t steps = 0;
  AutoHyper last;

  static CurveballState initial(std::size_t p, const CurveballOptions& options = {});
};

struct TrustRegionStats {
  double gamma = kNotComputed;
  double predicted = 0.0;
  double actual = 0.0;
};

/// Quadratic model f_hat(d) = J^T d + 1/2 d^T (C + lambda I) d restricted to
/// d = rho z - beta dz, with every entry computed from cached projections.
struct SubspaceModel {
  double dz_c_dz = 0.0;  ///< dz^T (C + lambda I) dz
  double z_c_dz = 0.0;   ///< z^T (C + lambda I) dz
  double z_c_z = 0.0;    ///< z^T (C + lambda I) z
  double g_dz = 0.0;     ///< J^T dz
  double g_z = 0.0;      ///< J^T z

  double value(double beta, double rho) const;
};

/// Builds the subspace model. `damping` is the lambda added to the curvature.
SubspaceModel subspace_model(const autodiff::Evaluation& evaluation,
                             const autodiff::Projection& z, const autodiff::Projection& dz,
                             double damping, bool include_curvature = true);

struct CurveballDelta {
  Tensor delta;                       ///< (C + lambda I) z + J
  autodiff::Projection z_projection;  ///< reused by the 2x2 system
};

/// One forward-mode pass for z's projection and one reverse-mode pass for
/// the residual (C + lambda I) z + J.
CurveballDelta curveball_delta(const autodiff::Evaluation& evaluation,
                               const CurveballState& state,
                               const CurveballOptions& options = {});

/// Minimises the subspace model over (beta, rho) through the 2x2 normal
/// equations. When they are singular (first step, or z parallel to dz) falls
/// back to rho = 0 with the exact line minimiser along dz, and to
/// beta_default when that has no positive curvature.
AutoHyper auto_hyper(const SubspaceModel& model, double beta_default = 1e-3);

/// Multiplicative trust-region update of lambda, clamped to the bounds.
double lambda_update(CurveballState& state, double gamma, const CurveballOptions& options = {});

/// z <- rho z - beta dz; w <- w + alpha z; lambda adapted every
/// `lambda_interval` steps using one extra objective evaluation of f(w + z).
StepInfo curveball_step(CurveballState& state, const autodiff::Problem& problem, Tensor& w,
                        const autodiff::Batch& batch, const CurveballOptions& options = {});

}  // namespace curveball::optim
