#include "curveball/autodiff/loss_curvature.hpp"

#include "curveball/errors.hpp"

namespace curveball::autodiff {

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kSquaredDistance: return "squared_distance";
    case LossKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case LossKind::kRawScalar: return "raw_scalar";
  }
  return "?";
}

LossCurvature LossCurvature::squared_distance(std::size_t batch) {
  if (batch == 0) throw InvalidDim("squared_distance curvature: empty batch");
  return LossCurvature(LossKind::kSquaredDistance, batch, Tensor());
}

LossCurvature LossCurvature::softmax(Tensor probabilities) {
  if (probabilities.rank() != 2 || probabilities.rows() == 0) {
    throw ShapeMismatch("softmax curvature expects an n x c probability matrix");
  }
  const std::size_t n = probabilities.rows();
  return LossCurvature(LossKind::kSoftmaxCrossEntropy, n, std::move(probabilities));
}

LossCurvature LossCurvature::raw_scalar() {
  return LossCurvature(LossKind::kRawScalar, 1, Tensor());
}

Tensor LossCurvature::apply(const Tensor& u) const {
  const double inv_n = 1.0 / static_cast<double>(batch_);
  switch (kind_) {
    case LossKind::kSquaredDistance:
      return (2.0 * inv_n) * u;
    case LossKind::kSoftmaxCrossEntropy: {
      const Tensor& p = probabilities_;
      if (u.size() != p.size()) {
        throw ShapeMismatch("softmax curvature: u " + shape_string(u.shape()) + " vs p " +
                            shape_string(p.shape()));
      }
      const std::size_t n = p.rows(), c = p.cols();
      Tensor out(u.shape());
      for (std::size_t i = 0; i < n; ++i) {
        double pu = 0.0;
        for (std::size_t j = 0; j < c; ++j) pu += p[i * c + j] * u[i * c + j];
        for (std::size_t j = 0; j < c; ++j) {
          const double pj = p[i * c + j];
          out[i * c + j] = inv_n * (pj * u[i * c + j] - pj * pu);
        }
      }
      return out;
    }
    case LossKind::kRawScalar:
      break;
  }
  throw UnsupportedLoss("raw scalar objectives have no loss curvature product");
}

double LossCurvature::inner(const Tensor& a, const Tensor& b) const {
  const double inv_n = 1.0 / static_cast<double>(batch_);
  switch (kind_) {
    case LossKind::kSquaredDistance:
      return 2.0 * inv_n * dot(a, b);
    case LossKind::kSoftmaxCrossEntropy: {
      const Tensor& p = probabilities_;
      if (a.size() != p.size() || b.size() != p.size()) {
        throw ShapeMismatch("softmax curvature inner: size mismatch");
      }
      const std::size_t n = p.rows(), c = p.cols();
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double pa = 0.0, pb = 0.0, pab = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          const double pj = p[i * c + j];
          pa += pj * a[i * c + j];
          pb += pj * b[i * c + j];
          pab += pj * a[i * c + j] * b[i * c + j];
        }
        total += pab - pa * pb;
      }
      return inv_n * total;
    }
    case LossKind::kRawScalar:
      break;
  }
  throw UnsupportedLoss("raw scalar objectives have no loss curvature product");
}

Tensor loss_hessian_product(const LossCurvature& curvature, const Tensor& u) {
  return curvature.apply(u);
}

}  // namespace curveball::autodiff
