#include "curveball/optim/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "curveball/errors.hpp"

namespace curveball::optim {

BfgsState BfgsState::identity(std::size_t p) { return {curveball::identity(p), 0, 0}; }

void BfgsState::reset() {
  inverse_hessian = curveball::identity(inverse_hessian.rows());
  updates = 0;
}

double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double radicand = d1 * d1 - da * db;
  const double midpoint = 0.5 * (a + b);
  if (!(radicand >= 0.0) || !std::isfinite(radicand)) return midpoint;
  const double d2 = std::copysign(std::sqrt(radicand), b - a);
  const double denominator = db - da + 2.0 * d2;
  if (denominator == 0.0 || !std::isfinite(denominator)) return midpoint;
  const double x = b - (b - a) * (db + d2 - d1) / denominator;
  return std::isfinite(x) ? x : midpoint;
}

namespace {

struct Trial {
  double step;
  double value;
  double slope;
  Tensor gradient;
};

// Keeps an interpolated step away from the interval ends.
double safeguard(double x, double lo, double hi) {
  const double left = std::min(lo, hi), right = std::max(lo, hi);
  const double margin = 0.1 * (right - left);
  if (!std::isfinite(x) || x < left + margin || x > right - margin) return 0.5 * (lo + hi);
  return x;
}

}  // namespace

LineSearchResult strong_wolfe_search(const LineFunction& phi, double value0, double slope0,
                                     const Tensor& direction, const BfgsOptions& options) {
  if (!(slope0 < 0.0)) throw LineSearchFailed("line search: not a descent direction");

  int evaluations = 0;
  std::optional<Trial> best;  // lowest value satisfying sufficient decrease
  auto evaluate = [&](double step) {
    auto [value, gradient] = phi(step);
    ++evaluations;
    Trial trial{step, value, dot(gradient, direction), std::move(gradient)};
    if (!std::isfinite(trial.value) || !std::isfinite(trial.slope)) {
      trial.value = std::numeric_limits<double>::infinity();
      trial.slope = std::numeric_limits<double>::quiet_NaN();
    }
    const bool armijo = trial.value <= value0 + options.c1 * step * slope0;
    if (armijo && (!best || trial.value < best->value)) best = trial;
    return trial;
  };
  auto strong_curvature = [&](const Trial& t) {
    return std::abs(t.slope) <= -options.c2 * slope0;
  };
  auto done = [&](Trial t) {
    return LineSearchResult{t.step, t.value, std::move(t.gradient), evaluations};
  };
  auto give_up = [&]() -> LineSearchResult {
    if (best) return done(*best);
    throw LineSearchFailed("line search: no sufficient decrease within " +
                           std::to_string(options.max_evaluations) + " evaluations");
  };

  auto zoom = [&](Trial lo, Trial hi) -> LineSearchResult {
    while (evaluations < options.max_evaluations) {
      double step;
      if (std::isfinite(hi.value) && std::isfinite(hi.slope)) {
        step = cubic_minimizer(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope);
      } else {
        step = 0.5 * (lo.step + hi.step);
      }
      step = safeguard(step, lo.step, hi.step);
      Trial trial = evaluate(step);
      if (trial.value > value0 + options.c1 * step * slope0 || trial.value >= lo.value) {
        hi = std::move(trial);
      } else {
        if (strong_curvature(trial)) return done(std::move(trial));
        if (trial.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(trial);
      }
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
    }
    return give_up();
  };

  Trial previous{0.0, value0, slope0, Tensor()};
  double step = options.initial_step;
  for (int i = 0; evaluations < options.max_evaluations; ++i) {
    Trial trial = evaluate(step);
    if (trial.value > value0 + options.c1 * step * slope0 ||
        (i > 0 && trial.value >= previous.value)) {
      return zoom(std::move(previous), std::move(trial));
    }
    if (strong_curvature(trial)) return done(std::move(trial));
    if (trial.slope >= 0.0) return zoom(std::move(trial), std::move(previous));
    // Extrapolate: cubic step beyond the current point, limited to [1.1, 4] times it.
    const double guess =
        cubic_minimizer(previous.step, previous.value, previous.slope, trial.step, trial.value,
                        trial.slope);
    const double next = std::clamp(std::isfinite(guess) ? guess : 2.0 * step, 1.1 * step,
                                   4.0 * step);
    previous = std::move(trial);
    step = next;
  }
  return give_up();
}

bool bfgs_update(Tensor& inverse_hessian, const Tensor& s, const Tensor& y, double tolerance) {
  const double sy = dot(s, y);
  if (!(sy > tolerance * norm(s) * norm(y))) return false;
  const std::size_t p = s.size();
  Tensor& b = inverse_hessian;
  const Tensor by = matvec(b, y);
  const double yby = dot(y, by);
  const double r = 1.0 / sy;
  const double ss_scale = r * r * yby + r;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      b(i, j) += ss_scale * s[i] * s[j] - r * (s[i] * by[j] + by[i] * s[j]);
    }
  }
  return true;
}

StepInfo bfgs_step(BfgsState& state, const autodiff::Problem& problem, Tensor& w,
                   const autodiff::Batch& batch, const BfgsOptions& options, Rng* resample) {
  const std::size_t p = w.size();
  if (p > options.cap) throw TooLarge("bfgs: p=" + std::to_string(p) + " exceeds dense cap");
  if (state.inverse_hessian.rank() != 2 || state.inverse_hessian.rows() != p) {
    state = BfgsState::identity(p);
  }

  const auto evaluation = problem.evaluate(w, batch);
  const Tensor gradient = evaluation->gradient();
  const Tensor direction = -matvec(state.inverse_hessian, gradient);

  LineFunction phi = [&](double step) {
    Tensor trial = w;
    axpy(step, direction, trial);
    const auto e = problem.evaluate(trial, resample ? problem.sample_batch(*resample) : batch);
    return std::pair<double, Tensor>{e->loss(), e->gradient()};
  };
  const LineSearchResult found =
      strong_wolfe_search(phi, evaluation->loss(), dot(gradient, direction), direction, options);

  const Tensor s = found.step * direction;
  const Tensor y = found.gradient - gradient;
  if (bfgs_update(state.inverse_hessian, s, y, options.curvature_tolerance)) {
    ++state.updates;
  } else {
    ++state.skipped;
  }

  w += s;
  StepInfo info;
  info.loss = evaluation->loss();
  info.step_norm = norm(s);
  info.beta = found.step;
  return info;
}

}  // namespace curveball::optim
