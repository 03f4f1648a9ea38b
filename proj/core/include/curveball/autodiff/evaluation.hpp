#pragma once

#include <memory>

#include "curveball/autodiff/problem.hpp"
#include "curveball/autodiff/tape.hpp"

namespace curveball::autodiff {

/// Evaluation backed by a recorded tape whose `output` node holds the model
/// outputs (n x o) and whose `loss` node holds the scalar mean loss.
class TapeEvaluation final : public Evaluation {
 public:
  TapeEvaluation(Tape tape, NodeId output, NodeId loss, LossKind kind);

  double loss() const override { return loss_; }
  const Tensor& outputs() const override { return tape_.value(output_); }
  std::size_t parameter_count() const override { return tape_.parameter_count(); }

  Tensor vjp(const Tensor& u) const override;
  Tensor jvp(const Tensor& v) const override;
  Tensor gradient() const override;
  const Tensor& loss_gradient() const override { return loss_gradient_; }
  const LossCurvature& loss_curvature() const override { return curvature_; }

  Projection project(const Tensor& v) const override;
  double curvature_inner(const Projection& a, const Projection& b) const override;
  double gradient_inner(const Projection& a) const override;
  Tensor damped_residual(const Projection& z, double lambda,
                         bool include_curvature) const override;
  Tensor curvature_product(const Tensor& v) const override;

  const Tape& tape() const { return tape_; }
  NodeId output_node() const { return output_; }
  NodeId loss_node() const { return loss_node_; }

 private:
  Tape tape_;
  NodeId output_;
  NodeId loss_node_;
  double loss_;
  Tensor loss_gradient_;
  LossCurvature curvature_;
};

/// Evaluation of a scalar objective with analytic gradient and Hessian.
/// The model output is the objective value itself (o = 1), so J_phi = J,
/// J_L = 1, and the curvature is the exact Hessian.
class ExactEvaluation final : public Evaluation {
 public:
  ExactEvaluation(double value, Tensor gradient, Tensor hessian);

  double loss() const override { return value_.item(); }
  const Tensor& outputs() const override { return value_; }
  std::size_t parameter_count() const override { return gradient_.size(); }

  Tensor vjp(const Tensor& u) const override;
  Tensor jvp(const Tensor& v) const override;
  Tensor gradient() const override;
  const Tensor& loss_gradient() const override { return unit_; }
  const LossCurvature& loss_curvature() const override { return curvature_; }

  Projection project(const Tensor& v) const override;
  double curvature_inner(const Projection& a, const Projection& b) const override;
  double gradient_inner(const Projection& a) const override;
  Tensor damped_residual(const Projection& z, double lambda,
                         bool include_curvature) const override;
  Tensor curvature_product(const Tensor& v) const override;
  Tensor curvature_matrix() const override;

  const Tensor& hessian() const { return hessian_; }

 private:
  Tensor value_;
  Tensor gradient_;
  Tensor hessian_;
  Tensor unit_;
  LossCurvature curvature_;
};

/// Base for problems whose objective is recorded on a Tape.
class TapeProblem : public Problem {
 public:
  std::unique_ptr<Evaluation> evaluate(const Tensor& w, const Batch& batch) const final;

  struct Graph {
    NodeId output;
    NodeId loss;
  };

  /// Records the model and loss for (w, batch) on `tape`.
  virtual Graph record(Tape& tape, const Batch& batch) const = 0;
};

}  // namespace curveball::autodiff
