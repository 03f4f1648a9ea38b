#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "curveball/numerics/tensor.hpp"

namespace curveball::autodiff {

using NodeId = std::size_t;

enum class OpKind {
  kParam,
  kConst,
  kAffine,
  kTanh,
  kRelu,
  kSquare,
  kSub,
  kMul,
  kScale,
  kSum,
  kMean,
  kSoftmaxCrossEntropy,
};

const char* op_name(OpKind kind);

/// Straight-line recording of a computation over tensors.
///
/// Nodes are appended in evaluation order, so every record's inputs precede
/// it. Parameter leaves are slices of one flat parameter vector; `tangent`
/// and `pullback` work in that flat space.
///
/// Tensors in a batch are row-major (n x features). `affine(x, W, b)` computes
/// x W^T + b with W stored as (out x in).
class Tape {
 public:
  explicit Tape(std::span<const double> parameters);

  NodeId param(std::size_t offset, Shape shape);
  NodeId constant(Tensor value);
  /// `bias` may be kNone.
  NodeId affine(NodeId x, NodeId weight, NodeId bias);
  NodeId tanh(NodeId x);
  NodeId relu(NodeId x);
  NodeId square(NodeId x);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId sum(NodeId x);
  NodeId mean(NodeId x);
  /// Mean over rows of -log softmax(logits)[label]. Saves the softmax
  /// probabilities, retrievable through `saved`.
  NodeId softmax_cross_entropy(NodeId logits, std::vector<std::size_t> labels);

  static constexpr NodeId kNone = static_cast<NodeId>(-1);

  std::size_t size() const { return nodes_.size(); }
  std::size_t parameter_count() const { return parameters_.size(); }
  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  const Tensor& saved(NodeId id) const { return nodes_.at(id).saved; }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  bool depends_on_parameters(NodeId id) const { return nodes_.at(id).live; }

  /// Forward-mode pass: derivative of node `output` along parameter
  /// direction `direction`. Counts one tangent pass.
  Tensor tangent(NodeId output, std::span<const double> direction) const;

  /// Reverse-mode pass: gradient w.r.t. the parameters of <cotangent, node
  /// `output`>. Counts one reverse pass.
  Tensor pullback(NodeId output, const Tensor& cotangent) const;

  /// Cotangent that reaches node `target` when `cotangent` is seeded at
  /// `output` (target < output), propagating only through the nodes between
  /// them. Used to read the loss gradient w.r.t. model outputs; not counted
  /// as a pass.
  Tensor cotangent_at(NodeId output, const Tensor& cotangent, NodeId target) const;

  /// Recomputes every node for new parameter values and returns node
  /// `output`'s value. Same numerics as recording.
  Tensor replay(NodeId output, std::span<const double> parameters) const;

 private:
  struct Node {
    explicit Node(OpKind k, NodeId a = kNone, NodeId b = kNone, NodeId c = kNone)
        : kind(k), in0(a), in1(b), in2(c) {}

    OpKind kind;
    NodeId in0 = kNone;
    NodeId in1 = kNone;
    NodeId in2 = kNone;
    std::size_t offset = 0;
    double factor = 1.0;
    std::vector<std::size_t> labels;
    Tensor value;
    Tensor saved;
    bool live = false;
  };

  NodeId push(Node node);
  void compute(Node& node, const std::vector<Node>& nodes,
               std::span<const double> parameters) const;
  void backward(NodeId output, const Tensor& cotangent, NodeId stop,
                std::vector<Tensor>& grads) const;

  std::vector<double> parameters_;
  std::vector<Node> nodes_;
};

}  // namespace curveball::autodiff
