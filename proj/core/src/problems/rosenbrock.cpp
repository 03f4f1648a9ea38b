#include "curveball/problems/rosenbrock.hpp"

#include "curveball/autodiff/evaluation.hpp"
#include "curveball/autodiff/pass_counters.hpp"
#include "curveball/errors.hpp"

namespace curveball::problems {

void NoiseSpec::validate() const {
  if (!(lo <= hi)) throw InvalidRange("noise spec requires lo <= hi");
}

double rosenbrock(double u, double v, double eps) {
  const double a = 1.0 - u;
  const double b = v - u * u;
  return a * a + 100.0 * eps * b * b;
}

Tensor rosenbrock_gradient(double u, double v, double eps) {
  const double b = v - u * u;
  return Tensor::vector({-2.0 * (1.0 - u) - 400.0 * eps * u * b, 200.0 * eps * b});
}

Tensor rosenbrock_hessian(double u, double v, double eps) {
  const double uu = 2.0 - 400.0 * eps * v + 1200.0 * eps * u * u;
  const double uv = -400.0 * eps * u;
  return Tensor::matrix({{uu, uv}, {uv, 200.0 * eps}});
}

RosenbrockProblem::RosenbrockProblem(NoiseSpec noise, Tensor start)
    : noise_(noise), start_(std::move(start)) {
  noise_.validate();
  if (start_.size() != 2) throw InvalidDim("rosenbrock start point must have 2 entries");
}

Tensor RosenbrockProblem::initial_point(Rng&) const { return start_; }

autodiff::Batch RosenbrockProblem::sample_batch(Rng& rng) const {
  return {{}, rng.uniform(noise_.lo, noise_.hi)};
}

std::unique_ptr<autodiff::Evaluation> RosenbrockProblem::evaluate(
    const Tensor& w, const autodiff::Batch& batch) const {
  if (w.size() != 2) throw ShapeMismatch("rosenbrock: expected 2 parameters");
  ++autodiff::pass_counters().primal;
  const double eps = batch.noise;
  return std::make_unique<autodiff::ExactEvaluation>(rosenbrock(w[0], w[1], eps),
                                                     rosenbrock_gradient(w[0], w[1], eps),
                                                     rosenbrock_hessian(w[0], w[1], eps));
}

}  // namespace curveball::problems
