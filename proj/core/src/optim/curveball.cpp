#include "curveball/optim/curveball.hpp"

#include <algorithm>
#include <cmath>

#include "curveball/errors.hpp"
#include "curveball/numerics/linalg.hpp"

namespace curveball::optim {

CurveballState CurveballState::initial(std::size_t p, const CurveballOptions& options) {
  CurveballState state;
  state.z = Tensor({p});
  state.lambda = options.lambda_init;
  state.alpha = options.alpha;
  return state;
}

double SubspaceModel::value(double beta, double rho) const {
  // d = rho z - beta dz
  const double linear = rho * g_z - beta * g_dz;
  const double quadratic = rho * rho * z_c_z - 2.0 * rho * beta * z_c_dz + beta * beta * dz_c_dz;
  return linear + 0.5 * quadratic;
}

SubspaceModel subspace_model(const autodiff::Evaluation& evaluation,
                             const autodiff::Projection& z, const autodiff::Projection& dz,
                             double damping, bool include_curvature) {
  SubspaceModel model;
  if (include_curvature) {
    model.dz_c_dz = evaluation.curvature_inner(dz, dz);
    model.z_c_dz = evaluation.curvature_inner(z, dz);
    model.z_c_z = evaluation.curvature_inner(z, z);
  }
  if (damping != 0.0) {
    model.dz_c_dz += damping * dot(dz.direction, dz.direction);
    model.z_c_dz += damping * dot(z.direction, dz.direction);
    model.z_c_z += damping * dot(z.direction, z.direction);
  }
  model.g_dz = evaluation.gradient_inner(dz);
  model.g_z = evaluation.gradient_inner(z);
  return model;
}

CurveballDelta curveball_delta(const autodiff::Evaluation& evaluation,
                               const CurveballState& state, const CurveballOptions& options) {
  if (state.z.size() != evaluation.parameter_count()) {
    throw ShapeMismatch("curveball: z does not match the parameter count");
  }
  autodiff::Projection z_projection = evaluation.project(state.z);
  Tensor delta = evaluation.damped_residual(z_projection, state.lambda, !options.zero_curvature);
  return {std::move(delta), std::move(z_projection)};
}

AutoHyper auto_hyper(const SubspaceModel& model, double beta_default) {
  // Stationarity of f_hat(rho z - beta dz) in (beta, rho):
  //   [ dz'C dz   -z'C dz ] [beta]   [ J'dz ]
  //   [ -z'C dz    z'C z  ] [rho ] = [ -J'z ]
  const Mat2 system{{{model.dz_c_dz, -model.z_c_dz}, {-model.z_c_dz, model.z_c_z}}};
  const Vec2 rhs{model.g_dz, -model.g_z};
  try {
    const Vec2 x = solve2x2(system, rhs);
    if (std::isfinite(x[0]) && std::isfinite(x[1])) return {x[0], x[1], false};
  } catch (const SingularSystem&) {
  }
  AutoHyper fallback{beta_default, 0.0, true};
  if (model.dz_c_dz > 0.0) {
    const double beta = model.g_dz / model.dz_c_dz;
    if (std::isfinite(beta)) fallback.beta = beta;
  }
  return fallback;
}

double lambda_update(CurveballState& state, double gamma, const CurveballOptions& options) {
  if (gamma > options.gamma_high) {
    state.lambda *= options.lambda_factor;
  } else if (gamma < options.gamma_low) {
    state.lambda /= options.lambda_factor;
  }
  state.lambda = std::clamp(state.lambda, options.lambda_min, options.lambda_max);
  return state.lambda;
}

StepInfo curveball_step(CurveballState& state, const autodiff::Problem& problem, Tensor& w,
                        const autodiff::Batch& batch, const CurveballOptions& options) {
  const auto evaluation = problem.evaluate(w, batch);
  CurveballDelta delta = curveball_delta(*evaluation, state, options);
  const autodiff::Projection dz_projection = evaluation->project(delta.delta);

  const double hyper_damping = options.damped_hyper ? state.lambda : 0.0;
  const SubspaceModel hyper_model =
      subspace_model(*evaluation, delta.z_projection, dz_projection, hyper_damping,
                     !options.zero_curvature);
  AutoHyper hyper{options.beta, options.rho, false};
  if (options.auto_hyper) hyper = auto_hyper(hyper_model, options.beta_default);
  state.last = hyper;

  // z <- rho z - beta dz; w <- w + alpha z
  Tensor& z = state.z;
  double moved = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = hyper.rho * z[i] - hyper.beta * delta.delta[i];
    const double step = state.alpha * z[i];
    w[i] += step;
    moved += step * step;
  }
  ++state.steps;

  StepInfo info;
  info.loss = evaluation->loss();
  info.step_norm = std::sqrt(moved);
  info.beta = hyper.beta;
  info.rho = hyper.rho;

  if (options.adapt_lambda && options.lambda_interval > 0 &&
      state.steps % options.lambda_interval == 0) {
    const SubspaceModel model =
        options.damped_hyper
            ? hyper_model
            : subspace_model(*evaluation, delta.z_projection, dz_projection, state.lambda,
                             !options.zero_curvature);
    TrustRegionStats stats;
    stats.predicted = model.value(hyper.beta, hyper.rho);
    if (stats.predicted != 0.0 && std::isfinite(stats.predicted)) {
      // f(w_old + z_new), which is f(w_new) when alpha = 1.
      Tensor probe = w;
      if (state.alpha != 1.0) axpy(1.0 - state.alpha, z, probe);
      stats.actual = problem.loss(probe, batch) - info.loss;
      stats.gamma = stats.actual / stats.predicted;
      if (!std::isnan(stats.gamma)) lambda_update(state, stats.gamma, options);
      info.gamma = stats.gamma;
    }
  }
  info.lambda = state.lambda;
  return info;
}

}  // namespace curveball::optim
