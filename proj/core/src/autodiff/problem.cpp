#include "curveball/autodiff/problem.hpp"

namespace curveball::autodiff {

Tensor Evaluation::curvature_matrix() const {
  const std::size_t p = parameter_count();
  Tensor out({p, p});
  Tensor basis({p});
  for (std::size_t j = 0; j < p; ++j) {
    basis[j] = 1.0;
    const Tensor column = curvature_product(basis);
    basis[j] = 0.0;
    for (std::size_t i = 0; i < p; ++i) out(i, j) = column[i];
  }
  return out;
}

}  // namespace curveball::autodiff
