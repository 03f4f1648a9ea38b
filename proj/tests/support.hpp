#pragma once

// Independent oracles shared by the unit tests.

#include <cmath>

#include "curveball/autodiff/problem.hpp"
#include "curveball/numerics/linalg.hpp"
#include "curveball/problems/dataset.hpp"
#include "curveball/problems/mlp.hpp"

namespace testing_support {

using curveball::Rng;
using curveball::Tensor;

inline Tensor gaussian(std::size_t n, Rng& rng, double scale = 1.0) {
  Tensor out({n});
  for (double& x : out) x = scale * rng.normal();
  return out;
}

inline double relative_error(const Tensor& a, const Tensor& b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  const double scale = std::max(curveball::norm(a), curveball::norm(b));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Central differences of the scalar loss, coordinate by coordinate.
inline Tensor numeric_gradient(const curveball::autodiff::Problem& problem, const Tensor& w,
                               const curveball::autodiff::Batch& batch, double h = 1e-6) {
  Tensor g({w.size()});
  for (std::size_t i = 0; i < w.size(); ++i) {
    Tensor plus = w, minus = w;
    plus[i] += h;
    minus[i] -= h;
    g[i] = (problem.loss(plus, batch) - problem.loss(minus, batch)) / (2 * h);
  }
  return g;
}

/// Output Jacobian (outputs x p) by central differences of phi(w).
inline Tensor numeric_output_jacobian(const curveball::autodiff::Problem& problem, const Tensor& w,
                                      const curveball::autodiff::Batch& batch, double h = 1e-6) {
  const std::size_t o = problem.evaluate(w, batch)->outputs().size();
  Tensor j({o, w.size()});
  for (std::size_t i = 0; i < w.size(); ++i) {
    Tensor plus = w, minus = w;
    plus[i] += h;
    minus[i] -= h;
    const Tensor a = problem.evaluate(plus, batch)->outputs();
    const Tensor b = problem.evaluate(minus, batch)->outputs();
    for (std::size_t r = 0; r < o; ++r) j(r, i) = (a[r] - b[r]) / (2 * h);
  }
  return j;
}

/// Softmax cross-entropy Hessian w.r.t. logits for a batch mean:
/// block-diagonal (1/n)(diag(p_i) - p_i p_i^T).
inline Tensor softmax_hessian(const Tensor& logits) {
  const std::size_t n = logits.rows(), c = logits.cols();
  Tensor h({n * c, n * c});
  for (std::size_t r = 0; r < n; ++r) {
    double top = logits(r, 0);
    for (std::size_t k = 1; k < c; ++k) top = std::max(top, logits(r, k));
    std::vector<double> p(c);
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) z += p[k] = std::exp(logits(r, k) - top);
    for (auto& x : p) x /= z;
    for (std::size_t a = 0; a < c; ++a) {
      for (std::size_t b = 0; b < c; ++b) {
        h(r * c + a, r * c + b) = ((a == b ? p[a] : 0.0) - p[a] * p[b]) / static_cast<double>(n);
      }
    }
  }
  return h;
}

inline curveball::problems::MlpProblem tiny_mlp(Rng& rng,
                                                curveball::problems::Activation activation =
                                                    curveball::problems::Activation::kTanh) {
  return curveball::problems::make_mlp({5, 8, 6, 3}, activation,
                                       curveball::problems::make_blobs(3, 8, 5, 3.0, rng), 12);
}

}  // namespace testing_support
