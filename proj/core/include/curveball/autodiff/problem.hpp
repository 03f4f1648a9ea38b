#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "curveball/autodiff/loss_curvature.hpp"
#include "curveball/numerics/rng.hpp"
#include "curveball/numerics/tensor.hpp"

namespace curveball::autodiff {

/// What one objective evaluation sees: a subset of data rows and, for
/// noisy analytic objectives, the multiplicative noise draw.
struct Batch {
  std::vector<std::size_t> rows;
  double noise = 1.0;
};

/// A direction paired with its image under the curvature factor: J_phi^T v
/// (output space) for Gauss-Newton problems, H v for exact-Hessian ones.
struct Projection {
  Tensor direction;
  Tensor image;
};

/// The objective linearised at one (w, batch): the model outputs, the loss
/// value, and the derivative products needed by first and second order
/// optimizers.
///
/// Convention: `jvp` maps parameter space to output space (J_phi^T v),
/// `vjp` maps output space back to parameter space (J_phi u).
class Evaluation {
 public:
  virtual ~Evaluation() = default;

  virtual double loss() const = 0;
  virtual const Tensor& outputs() const = 0;
  virtual std::size_t parameter_count() const = 0;

  virtual Tensor vjp(const Tensor& u) const = 0;
  virtual Tensor jvp(const Tensor& v) const = 0;
  /// J = J_phi J_L; one reverse pass.
  virtual Tensor gradient() const = 0;
  /// J_L, the loss gradient w.r.t. the outputs.
  virtual const Tensor& loss_gradient() const = 0;
  virtual const LossCurvature& loss_curvature() const = 0;

  /// Curvature used by second-order methods: Gauss-Newton where the loss
  /// has a curvature product, otherwise the exact Hessian.
  /// One tangent pass.
  virtual Projection project(const Tensor& v) const = 0;
  /// a^T C b from cached images; element-wise cost only.
  virtual double curvature_inner(const Projection& a, const Projection& b) const = 0;
  /// J^T a from the cached image; element-wise cost only.
  virtual double gradient_inner(const Projection& a) const = 0;
  /// (C + lambda I) z + J with one reverse pass. With `include_curvature`
  /// false the C z term is dropped, leaving J + lambda z.
  virtual Tensor damped_residual(const Projection& z, double lambda,
                                 bool include_curvature = true) const = 0;
  /// C v, one tangent and one reverse pass.
  virtual Tensor curvature_product(const Tensor& v) const = 0;
  /// Dense C built column by column; for small p only.
  virtual Tensor curvature_matrix() const;
};

/// A differentiable objective f(w) = L(phi(w)) with minibatch sampling.
/// Problems are immutable after construction.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t parameter_count() const = 0;
  /// Outputs per sample.
  virtual std::size_t output_count() const = 0;
  virtual LossKind loss_kind() const = 0;

  virtual Tensor initial_point(Rng& rng) const = 0;
  virtual Batch sample_batch(Rng& rng) const = 0;
  /// Batch defining the noise-free objective used for convergence checks.
  virtual Batch reference_batch() const = 0;
  /// Initial CURVEBALL damping suited to the problem's curvature scale, if it
  /// differs from the optimizer default.
  virtual std::optional<double> initial_damping() const { return std::nullopt; }

  /// Records the objective at (w, batch). Counts one primal pass.
  virtual std::unique_ptr<Evaluation> evaluate(const Tensor& w, const Batch& batch) const = 0;

  double loss(const Tensor& w, const Batch& batch) const { return evaluate(w, batch)->loss(); }
  double reference_loss(const Tensor& w) const { return loss(w, reference_batch()); }
};

}  // namespace curveball::autodiff
