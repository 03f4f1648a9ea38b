#include "curveball/autodiff/differentiation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curveball/errors.hpp"

namespace curveball::autodiff {

Tensor vjp(const Problem& problem, const Tensor& w, const Batch& batch, const Tensor& u) {
  return problem.evaluate(w, batch)->vjp(u);
}

Tensor jvp(const Problem& problem, const Tensor& w, const Batch& batch, const Tensor& v) {
  return problem.evaluate(w, batch)->jvp(v);
}

HvpResult gauss_newton_hvp(const Evaluation& evaluation, const Tensor& v) {
  const LossCurvature& curvature = evaluation.loss_curvature();
  if (curvature.kind() == LossKind::kRawScalar) {
    throw UnsupportedLoss("gauss_newton_hvp: raw scalar objective has no Gauss-Newton split");
  }
  Tensor projection = evaluation.jvp(v);
  Tensor product = evaluation.vjp(curvature.apply(projection));
  return {std::move(product), std::move(projection)};
}

HvpResult gauss_newton_hvp(const Problem& problem, const Tensor& w, const Batch& batch,
                           const Tensor& v) {
  return gauss_newton_hvp(*problem.evaluate(w, batch), v);
}

Tensor full_hessian(const Problem& problem, const Tensor& w, const Batch& batch,
                    std::size_t cap) {
  const std::size_t p = w.size();
  if (p > cap) {
    throw TooLarge("full_hessian: p=" + std::to_string(p) + " exceeds cap " + std::to_string(cap));
  }
  const double h = 1e-5 * (1.0 + max_abs(w));
  Tensor out({p, p});
  Tensor probe = w;
  for (std::size_t j = 0; j < p; ++j) {
    probe[j] = w[j] + h;
    const Tensor plus = problem.evaluate(probe, batch)->gradient();
    probe[j] = w[j] - h;
    const Tensor minus = problem.evaluate(probe, batch)->gradient();
    probe[j] = w[j];
    for (std::size_t i = 0; i < p; ++i) out(i, j) = (plus[i] - minus[i]) / (2.0 * h);
  }
  return out;
}

}  // namespace curveball::autodiff
