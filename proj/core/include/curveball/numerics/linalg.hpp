#pragma once

#include <array>
#include <cstddef>

#include "curveball/numerics/rng.hpp"
#include "curveball/numerics/tensor.hpp"

namespace curveball {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Vec2 = std::array<double, 2>;

/// Solves a*x = b by Cramer's rule. Throws SingularSystem when
/// |det a| <= 1e-12 * max(1, |a|_inf^2).
Vec2 solve2x2(const Mat2& a, const Vec2& b);

inline constexpr std::size_t kDefaultDenseCap = 10000;

/// Cholesky factor L (lower triangular, row-major) with a = L L^T.
/// Throws NotPositiveDefinite when a pivot is not strictly positive.
Tensor cholesky(const Tensor& a);
Tensor cholesky_solve(const Tensor& lower, const Tensor& b);
/// Solves a symmetric positive definite system. Throws TooLarge when n > cap.
Tensor symmetric_solve(const Tensor& a, const Tensor& b, std::size_t cap = kDefaultDenseCap);

Tensor identity(std::size_t n);
Tensor transpose(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matvec(const Tensor& a, const Tensor& x);
/// Row-major matrix with the given diagonal.
Tensor diagonal(const Tensor& values);

/// Haar-ish random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
Tensor random_orthogonal(std::size_t n, Rng& rng);

/// Largest and smallest eigenvalue of a symmetric PD matrix, by power and
/// inverse power iteration.
struct EigenRange {
  double smallest;
  double largest;
};
EigenRange eigen_range_spd(const Tensor& a, std::size_t iterations = 500);

/// 2-norm condition number of a square matrix, estimated on A^T A.
double condition_number(const Tensor& a, std::size_t iterations = 500);

}  // namespace curveball
