#include "curveball/problems/quadratic.hpp"

#include <cmath>

#include "curveball/autodiff/evaluation.hpp"
#include "curveball/autodiff/pass_counters.hpp"
#include "curveball/errors.hpp"
#include "curveball/numerics/linalg.hpp"

namespace curveball::problems {

QuadraticProblem::QuadraticProblem(Tensor hessian, Tensor minimizer, std::optional<Tensor> start)
    : hessian_(std::move(hessian)), minimizer_(std::move(minimizer)), start_(std::move(start)) {
  const std::size_t p = minimizer_.size();
  if (p == 0) throw InvalidDim("quadratic: empty parameter vector");
  if (hessian_.rank() != 2 || hessian_.rows() != p || hessian_.cols() != p) {
    throw ShapeMismatch("quadratic: Hessian " + shape_string(hessian_.shape()) +
                        " does not match p=" + std::to_string(p));
  }
  if (start_ && start_->size() != p) throw ShapeMismatch("quadratic: start length mismatch");
}

Tensor QuadraticProblem::initial_point(Rng& rng) const {
  if (start_) return *start_;
  Tensor w({minimizer_.size()});
  for (double& x : w) x = rng.normal();
  return w;
}

std::unique_ptr<autodiff::Evaluation> QuadraticProblem::evaluate(const Tensor& w,
                                                                  const autodiff::Batch&) const {
  if (w.size() != minimizer_.size()) throw ShapeMismatch("quadratic: parameter length mismatch");
  ++autodiff::pass_counters().primal;
  const Tensor offset = w - minimizer_;
  Tensor gradient = matvec(hessian_, offset);
  const double value = 0.5 * dot(offset, gradient);
  return std::make_unique<autodiff::ExactEvaluation>(value, std::move(gradient), hessian_);
}

QuadraticProblem make_random_quadratic(std::size_t p, double condition, Rng& rng) {
  if (p == 0 || !(condition >= 1.0)) throw InvalidDim("make_random_quadratic: bad arguments");
  const Tensor q = random_orthogonal(p, rng);
  Tensor eigen({p});
  for (std::size_t i = 0; i < p; ++i) {
    const double t = p == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(p - 1);
    eigen[i] = std::pow(condition, t);
  }
  Tensor hessian = matmul(matmul(q, diagonal(eigen)), transpose(q));
  // Exact symmetry.
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) hessian(j, i) = hessian(i, j);
  Tensor minimizer({p});
  for (double& x : minimizer) x = rng.normal();
  return QuadraticProblem(std::move(hessian), std::move(minimizer));
}

}  // namespace curveball::problems
