#include "curveball/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curveball/autodiff/pass_counters.hpp"
#include "curveball/errors.hpp"

namespace curveball::autodiff {

PassCounters& pass_counters() {
  thread_local PassCounters counters;
  return counters;
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kParam: return "param";
    case OpKind::kConst: return "const";
    case OpKind::kAffine: return "affine";
    case OpKind::kTanh: return "tanh";
    case OpKind::kRelu: return "relu";
    case OpKind::kSquare: return "square";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
  }
  return "?";
}

namespace {

// y = x w^T + b, x: n x k, w: m x k
Tensor affine_forward(const Tensor& x, const Tensor& w, const Tensor* b) {
  const std::size_t n = x.rows(), k = x.cols(), m = w.rows();
  Tensor y({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = &x.data()[i * k];
    for (std::size_t j = 0; j < m; ++j) {
      const double* wj = &w.data()[j * k];
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += xi[l] * wj[l];
      y(i, j) = b ? s + (*b)[j] : s;
    }
  }
  return y;
}

// out += g w, g: n x m, w: m x k
void add_gw(const Tensor& g, const Tensor& w, Tensor& out) {
  const std::size_t n = g.rows(), m = g.cols(), k = w.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* oi = &out.data()[i * k];
    for (std::size_t j = 0; j < m; ++j) {
      const double gij = g(i, j);
      if (gij == 0.0) continue;
      const double* wj = &w.data()[j * k];
      for (std::size_t l = 0; l < k; ++l) oi[l] += gij * wj[l];
    }
  }
}

// out += g^T x, g: n x m, x: n x k
void add_gtx(const Tensor& g, const Tensor& x, Tensor& out) {
  const std::size_t n = g.rows(), m = g.cols(), k = x.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = &x.data()[i * k];
    for (std::size_t j = 0; j < m; ++j) {
      const double gij = g(i, j);
      if (gij == 0.0) continue;
      double* oj = &out.data()[j * k];
      for (std::size_t l = 0; l < k; ++l) oj[l] += gij * xi[l];
    }
  }
}

void accumulate(Tensor& slot, Tensor contribution) {
  if (slot.empty() && slot.shape().empty()) {
    slot = std::move(contribution);
  } else {
    slot += contribution;
  }
}

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeMismatch(std::string(what) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

}  // namespace

Tape::Tape(std::span<const double> parameters)
    : parameters_(parameters.begin(), parameters.end()) {}

NodeId Tape::push(Node node) {
  compute(node, nodes_, parameters_);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId Tape::param(std::size_t offset, Shape shape) {
  if (offset + shape_size(shape) > parameters_.size()) {
    throw ShapeMismatch("param slice [" + std::to_string(offset) + ", +" +
                        std::to_string(shape_size(shape)) + ") exceeds parameter count " +
                        std::to_string(parameters_.size()));
  }
  Node node(OpKind::kParam);
  node.offset = offset;
  node.value = Tensor(std::move(shape));
  node.live = true;
  return push(std::move(node));
}

NodeId Tape::constant(Tensor value) {
  Node node(OpKind::kConst);
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId Tape::affine(NodeId x, NodeId weight, NodeId bias) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(weight);
  require_rank2(xv, "affine input");
  require_rank2(wv, "affine weight");
  if (xv.cols() != wv.cols()) {
    throw ShapeMismatch("affine: input " + shape_string(xv.shape()) + " vs weight " +
                        shape_string(wv.shape()));
  }
  if (bias != kNone && value(bias).size() != wv.rows()) {
    throw ShapeMismatch("affine: bias length does not match weight rows");
  }
  Node node(OpKind::kAffine, x, weight, bias);
  node.live = nodes_[x].live || nodes_[weight].live || (bias != kNone && nodes_[bias].live);
  return push(std::move(node));
}

NodeId Tape::tanh(NodeId x) {
  Node node(OpKind::kTanh, x);
  node.live = nodes_.at(x).live;
  return push(std::move(node));
}

NodeId Tape::relu(NodeId x) {
  Node node(OpKind::kRelu, x);
  node.live = nodes_.at(x).live;
  return push(std::move(node));
}

NodeId Tape::square(NodeId x) {
  Node node(OpKind::kSquare, x);
  node.live = nodes_.at(x).live;
  return push(std::move(node));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "sub");
  Node node(OpKind::kSub, a, b);
  node.live = nodes_[a].live || nodes_[b].live;
  return push(std::move(node));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "mul");
  Node node(OpKind::kMul, a, b);
  node.live = nodes_[a].live || nodes_[b].live;
  return push(std::move(node));
}

NodeId Tape::scale(NodeId x, double factor) {
  Node node(OpKind::kScale, x);
  node.factor = factor;
  node.live = nodes_.at(x).live;
  return push(std::move(node));
}

NodeId Tape::sum(NodeId x) {
  Node node(OpKind::kSum, x);
  node.live = nodes_.at(x).live;
  return push(std::move(node));
}

NodeId Tape::mean(NodeId x) {
  if (value(x).size() == 0) throw ShapeMismatch("mean of empty tensor");
  Node node(OpKind::kMean, x);
  node.live = nodes_.at(x).live;
  return push(std::move(node));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, std::vector<std::size_t> labels) {
  const Tensor& z = value(logits);
  require_rank2(z, "softmax_cross_entropy");
  if (labels.size() != z.rows() || z.rows() == 0) {
    throw ShapeMismatch("softmax_cross_entropy: " + std::to_string(labels.size()) +
                        " labels for logits " + shape_string(z.shape()));
  }
  for (std::size_t label : labels) {
    if (label >= z.cols()) throw ShapeMismatch("softmax_cross_entropy: label out of range");
  }
  Node node(OpKind::kSoftmaxCrossEntropy, logits);
  node.labels = std::move(labels);
  node.live = nodes_[logits].live;
  return push(std::move(node));
}

void Tape::compute(Node& node, const std::vector<Node>& nodes,
                   std::span<const double> parameters) const {
  switch (node.kind) {
    case OpKind::kParam: {
      auto out = node.value.data();
      std::copy_n(parameters.begin() + static_cast<std::ptrdiff_t>(node.offset), out.size(),
                  out.begin());
      return;
    }
    case OpKind::kConst:
      return;
    case OpKind::kAffine: {
      const Tensor* b = node.in2 == kNone ? nullptr : &nodes[node.in2].value;
      node.value = affine_forward(nodes[node.in0].value, nodes[node.in1].value, b);
      return;
    }
    case OpKind::kTanh: {
      node.value = nodes[node.in0].value;
      for (double& v : node.value) v = std::tanh(v);
      return;
    }
    case OpKind::kRelu: {
      node.value = nodes[node.in0].value;
      for (double& v : node.value) v = v > 0.0 ? v : 0.0;
      return;
    }
    case OpKind::kSquare: {
      node.value = nodes[node.in0].value;
      for (double& v : node.value) v = v * v;
      return;
    }
    case OpKind::kSub:
      node.value = nodes[node.in0].value - nodes[node.in1].value;
      return;
    case OpKind::kMul:
      node.value = hadamard(nodes[node.in0].value, nodes[node.in1].value);
      return;
    case OpKind::kScale:
      node.value = node.factor * nodes[node.in0].value;
      return;
    case OpKind::kSum:
    case OpKind::kMean: {
      const Tensor& x = nodes[node.in0].value;
      double s = 0.0;
      for (double v : x) s += v;
      if (node.kind == OpKind::kMean) s /= static_cast<double>(x.size());
      node.value = Tensor::scalar(s);
      return;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      const Tensor& z = nodes[node.in0].value;
      const std::size_t n = z.rows(), c = z.cols();
      node.saved = Tensor({n, c});
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double peak = z(i, 0);
        for (std::size_t j = 1; j < c; ++j) peak = std::max(peak, z(i, j));
        double partition = 0.0;
        for (std::size_t j = 0; j < c; ++j) partition += std::exp(z(i, j) - peak);
        const double log_partition = std::log(partition);
        for (std::size_t j = 0; j < c; ++j) {
          node.saved(i, j) = std::exp(z(i, j) - peak - log_partition);
        }
        total -= z(i, node.labels[i]) - peak - log_partition;
      }
      node.value = Tensor::scalar(total / static_cast<double>(n));
      return;
    }
  }
}

Tensor Tape::tangent(NodeId output, std::span<const double> direction) const {
  if (direction.size() != parameters_.size()) {
    throw ShapeMismatch("tangent: direction has length " + std::to_string(direction.size()) +
                        ", expected " + std::to_string(parameters_.size()));
  }
  if (output >= nodes_.size()) throw ShapeMismatch("tangent: unknown node");
  ++pass_counters().tangent;

  std::vector<Tensor> tan(output + 1);
  auto live = [&](NodeId id) { return id != kNone && nodes_[id].live; };

  for (NodeId id = 0; id <= output; ++id) {
    const Node& node = nodes_[id];
    if (!node.live) continue;
    Tensor& out = tan[id];
    switch (node.kind) {
      case OpKind::kParam: {
        out = Tensor(node.value.shape());
        std::copy_n(direction.begin() + static_cast<std::ptrdiff_t>(node.offset), out.size(),
                    out.begin());
        break;
      }
      case OpKind::kConst:
        break;
      case OpKind::kAffine: {
        const Tensor& x = nodes_[node.in0].value;
        const Tensor& w = nodes_[node.in1].value;
        out = Tensor(node.value.shape());
        if (live(node.in0)) out += affine_forward(tan[node.in0], w, nullptr);
        if (live(node.in1)) out += affine_forward(x, tan[node.in1], nullptr);
        if (live(node.in2)) {
          const Tensor& db = tan[node.in2];
          for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += db[j];
        }
        break;
      }
      case OpKind::kTanh: {
        out = tan[node.in0];
        for (std::size_t i = 0; i < out.size(); ++i) {
          const double y = node.value[i];
          out[i] *= 1.0 - y * y;
        }
        break;
      }
      case OpKind::kRelu: {
        out = tan[node.in0];
        const Tensor& x = nodes_[node.in0].value;
        for (std::size_t i = 0; i < out.size(); ++i)
          if (!(x[i] > 0.0)) out[i] = 0.0;
        break;
      }
      case OpKind::kSquare: {
        out = tan[node.in0];
        const Tensor& x = nodes_[node.in0].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= 2.0 * x[i];
        break;
      }
      case OpKind::kSub: {
        out = Tensor(node.value.shape());
        if (live(node.in0)) out += tan[node.in0];
        if (live(node.in1)) out -= tan[node.in1];
        break;
      }
      case OpKind::kMul: {
        out = Tensor(node.value.shape());
        if (live(node.in0)) out += hadamard(tan[node.in0], nodes_[node.in1].value);
        if (live(node.in1)) out += hadamard(nodes_[node.in0].value, tan[node.in1]);
        break;
      }
      case OpKind::kScale:
        out = node.factor * tan[node.in0];
        break;
      case OpKind::kSum:
      case OpKind::kMean: {
        double s = 0.0;
        for (double v : tan[node.in0]) s += v;
        if (node.kind == OpKind::kMean) s /= static_cast<double>(tan[node.in0].size());
        out = Tensor::scalar(s);
        break;
      }
      case OpKind::kSoftmaxCrossEntropy: {
        const Tensor& dz = tan[node.in0];
        const Tensor& p = node.saved;
        double s = 0.0;
        for (std::size_t i = 0; i < p.rows(); ++i) {
          for (std::size_t j = 0; j < p.cols(); ++j) s += p(i, j) * dz(i, j);
          s -= dz(i, node.labels[i]);
        }
        out = Tensor::scalar(s / static_cast<double>(p.rows()));
        break;
      }
    }
  }
  if (!nodes_[output].live) return Tensor(nodes_[output].value.shape());
  return std::move(tan[output]);
}

void Tape::backward(NodeId output, const Tensor& cotangent, NodeId stop,
                    std::vector<Tensor>& grads) const {
  if (output >= nodes_.size()) throw ShapeMismatch("backward: unknown node");
  require_same_shape(nodes_[output].value, cotangent, "backward seed");
  grads.assign(output + 1, Tensor());
  grads[output] = cotangent;
  auto live = [&](NodeId id) { return id != kNone && nodes_[id].live; };

  for (NodeId id = output + 1; id-- > 0;) {
    if (stop != kNone && id <= stop) break;
    const Node& node = nodes_[id];
    if (!node.live || (grads[id].empty() && grads[id].shape().empty())) continue;
    const Tensor& g = grads[id];
    switch (node.kind) {
      case OpKind::kParam:
      case OpKind::kConst:
        break;
      case OpKind::kAffine: {
        const Tensor& x = nodes_[node.in0].value;
        const Tensor& w = nodes_[node.in1].value;
        if (live(node.in0)) {
          Tensor gx(x.shape());
          add_gw(g, w, gx);
          accumulate(grads[node.in0], std::move(gx));
        }
        if (live(node.in1)) {
          Tensor gw(w.shape());
          add_gtx(g, x, gw);
          accumulate(grads[node.in1], std::move(gw));
        }
        if (live(node.in2)) {
          Tensor gb(nodes_[node.in2].value.shape());
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g(i, j);
          accumulate(grads[node.in2], std::move(gb));
        }
        break;
      }
      case OpKind::kTanh: {
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.size(); ++i) {
          const double y = node.value[i];
          gx[i] *= 1.0 - y * y;
        }
        accumulate(grads[node.in0], std::move(gx));
        break;
      }
      case OpKind::kRelu: {
        Tensor gx = g;
        const Tensor& x = nodes_[node.in0].value;
        for (std::size_t i = 0; i < gx.size(); ++i)
          if (!(x[i] > 0.0)) gx[i] = 0.0;
        accumulate(grads[node.in0], std::move(gx));
        break;
      }
      case OpKind::kSquare: {
        Tensor gx = g;
        const Tensor& x = nodes_[node.in0].value;
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= 2.0 * x[i];
        accumulate(grads[node.in0], std::move(gx));
        break;
      }
      case OpKind::kSub:
        if (live(node.in0)) accumulate(grads[node.in0], g);
        if (live(node.in1)) accumulate(grads[node.in1], -g);
        break;
      case OpKind::kMul:
        if (live(node.in0)) accumulate(grads[node.in0], hadamard(g, nodes_[node.in1].value));
        if (live(node.in1)) accumulate(grads[node.in1], hadamard(nodes_[node.in0].value, g));
        break;
      case OpKind::kScale:
        accumulate(grads[node.in0], node.factor * g);
        break;
      case OpKind::kSum:
      case OpKind::kMean: {
        const Tensor& x = nodes_[node.in0].value;
        double v = g.item();
        if (node.kind == OpKind::kMean) v /= static_cast<double>(x.size());
        accumulate(grads[node.in0], Tensor(x.shape(), v));
        break;
      }
      case OpKind::kSoftmaxCrossEntropy: {
        const Tensor& p = node.saved;
        const double n = static_cast<double>(p.rows());
        const double seed = g.item();
        Tensor gz(p.shape());
        for (std::size_t i = 0; i < p.rows(); ++i) {
          for (std::size_t j = 0; j < p.cols(); ++j) {
            const double target = j == node.labels[i] ? 1.0 : 0.0;
            gz(i, j) = seed * (p(i, j) - target) / n;
          }
        }
        accumulate(grads[node.in0], std::move(gz));
        break;
      }
    }
  }
}

Tensor Tape::pullback(NodeId output, const Tensor& cotangent) const {
  ++pass_counters().reverse;
  std::vector<Tensor> grads;
  backward(output, cotangent, kNone, grads);
  Tensor result({parameters_.size()});
  for (NodeId id = 0; id < grads.size(); ++id) {
    const Node& node = nodes_[id];
    if (node.kind != OpKind::kParam || grads[id].size() == 0) continue;
    for (std::size_t i = 0; i < grads[id].size(); ++i) result[node.offset + i] += grads[id][i];
  }
  return result;
}

Tensor Tape::cotangent_at(NodeId output, const Tensor& cotangent, NodeId target) const {
  if (target >= output) throw ShapeMismatch("cotangent_at: target must precede output");
  std::vector<Tensor> grads;
  backward(output, cotangent, target, grads);
  if (grads[target].size() == 0) return Tensor(nodes_[target].value.shape());
  return std::move(grads[target]);
}

Tensor Tape::replay(NodeId output, std::span<const double> parameters) const {
  if (parameters.size() != parameters_.size()) {
    throw ShapeMismatch("replay: parameter count mismatch");
  }
  std::vector<Node> nodes = nodes_;
  for (NodeId id = 0; id <= output; ++id) compute(nodes[id], nodes, parameters);
  return nodes[output].value;
}

}  // namespace curveball::autodiff
