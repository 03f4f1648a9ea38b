#include "curveball/autodiff/evaluation.hpp"

#include "curveball/autodiff/pass_counters.hpp"
#include "curveball/errors.hpp"

namespace curveball::autodiff {

namespace {

LossCurvature curvature_for(const Tape& tape, NodeId output, NodeId loss, LossKind kind) {
  switch (kind) {
    case LossKind::kSquaredDistance:
      return LossCurvature::squared_distance(tape.value(output).rows());
    case LossKind::kSoftmaxCrossEntropy:
      if (tape.kind(loss) != OpKind::kSoftmaxCrossEntropy) {
        throw UnsupportedLoss("softmax curvature requires a fused softmax_cross_entropy loss node");
      }
      return LossCurvature::softmax(tape.saved(loss));
    case LossKind::kRawScalar:
      break;
  }
  return LossCurvature::raw_scalar();
}

}  // namespace

TapeEvaluation::TapeEvaluation(Tape tape, NodeId output, NodeId loss, LossKind kind)
    : tape_(std::move(tape)),
      output_(output),
      loss_node_(loss),
      loss_(tape_.value(loss).item()),
      loss_gradient_(tape_.cotangent_at(loss, Tensor::scalar(1.0), output)),
      curvature_(curvature_for(tape_, output, loss, kind)) {}

Tensor TapeEvaluation::vjp(const Tensor& u) const {
  if (u.size() != outputs().size()) {
    throw ShapeMismatch("vjp: cotangent " + shape_string(u.shape()) + " vs outputs " +
                        shape_string(outputs().shape()));
  }
  return tape_.pullback(output_, u.reshaped(outputs().shape()));
}

Tensor TapeEvaluation::jvp(const Tensor& v) const { return tape_.tangent(output_, v.data()); }

Tensor TapeEvaluation::gradient() const { return tape_.pullback(output_, loss_gradient_); }

Projection TapeEvaluation::project(const Tensor& v) const { return {v, jvp(v)}; }

double TapeEvaluation::curvature_inner(const Projection& a, const Projection& b) const {
  return curvature_.inner(a.image, b.image);
}

double TapeEvaluation::gradient_inner(const Projection& a) const {
  return dot(loss_gradient_, a.image);
}

Tensor TapeEvaluation::damped_residual(const Projection& z, double lambda,
                                       bool include_curvature) const {
  Tensor seed = loss_gradient_;
  if (include_curvature) seed += curvature_.apply(z.image);
  Tensor out = tape_.pullback(output_, seed);
  if (lambda != 0.0) axpy(lambda, z.direction, out);
  return out;
}

Tensor TapeEvaluation::curvature_product(const Tensor& v) const {
  return vjp(curvature_.apply(jvp(v)));
}

ExactEvaluation::ExactEvaluation(double value, Tensor gradient, Tensor hessian)
    : value_(Tensor::vector({value})),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)),
      unit_(Tensor::vector({1.0})),
      curvature_(LossCurvature::raw_scalar()) {
  const std::size_t p = gradient_.size();
  if (hessian_.rank() != 2 || hessian_.rows() != p || hessian_.cols() != p) {
    throw ShapeMismatch("exact evaluation: Hessian " + shape_string(hessian_.shape()) +
                        " does not match gradient length " + std::to_string(p));
  }
}

Tensor ExactEvaluation::vjp(const Tensor& u) const {
  if (u.size() != 1) throw ShapeMismatch("vjp: scalar objective takes a 1-vector");
  ++pass_counters().reverse;
  return u[0] * gradient_;
}

Tensor ExactEvaluation::jvp(const Tensor& v) const {
  if (v.size() != gradient_.size()) throw ShapeMismatch("jvp: direction length mismatch");
  ++pass_counters().tangent;
  return Tensor::vector({dot(gradient_, v)});
}

Tensor ExactEvaluation::gradient() const {
  ++pass_counters().reverse;
  return gradient_;
}

Projection ExactEvaluation::project(const Tensor& v) const {
  if (v.size() != gradient_.size()) throw ShapeMismatch("project: direction length mismatch");
  ++pass_counters().tangent;
  Tensor image({v.size()});
  const std::size_t p = v.size();
  for (std::size_t i = 0; i < p; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += hessian_(i, j) * v[j];
    image[i] = s;
  }
  return {v, std::move(image)};
}

double ExactEvaluation::curvature_inner(const Projection& a, const Projection& b) const {
  return dot(a.direction, b.image);
}

double ExactEvaluation::gradient_inner(const Projection& a) const {
  return dot(gradient_, a.direction);
}

Tensor ExactEvaluation::damped_residual(const Projection& z, double lambda,
                                        bool include_curvature) const {
  ++pass_counters().reverse;
  Tensor out = gradient_;
  if (include_curvature) out += z.image;
  if (lambda != 0.0) axpy(lambda, z.direction, out);
  return out;
}

Tensor ExactEvaluation::curvature_product(const Tensor& v) const {
  Projection projected = project(v);
  ++pass_counters().reverse;
  return std::move(projected.image);
}

Tensor ExactEvaluation::curvature_matrix() const { return hessian_; }

std::unique_ptr<Evaluation> TapeProblem::evaluate(const Tensor& w, const Batch& batch) const {
  if (w.size() != parameter_count()) {
    throw ShapeMismatch(name() + ": parameter vector has length " + std::to_string(w.size()) +
                        ", expected " + std::to_string(parameter_count()));
  }
  ++pass_counters().primal;
  Tape tape(w.data());
  const Graph graph = record(tape, batch);
  return std::make_unique<TapeEvaluation>(std::move(tape), graph.output, graph.loss, loss_kind());
}

}  // namespace curveball::autodiff
