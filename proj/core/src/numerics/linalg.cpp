#include "curveball/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curveball/errors.hpp"

namespace curveball {

namespace {

void require_square(const Tensor& a, const char* what) {
  if (a.rank() != 2 || a.rows() != a.cols()) {
    throw ShapeMismatch(std::string(what) + ": expected square matrix, got " +
                        shape_string(a.shape()));
  }
}

}  // namespace

Vec2 solve2x2(const Mat2& a, const Vec2& b) {
  const double norm_inf = std::max(std::abs(a[0][0]) + std::abs(a[0][1]),
                                   std::abs(a[1][0]) + std::abs(a[1][1]));
  const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  const double threshold = 1e-12 * std::max(1.0, norm_inf * norm_inf);
  if (!(std::abs(det) > threshold)) {
    throw SingularSystem("2x2 system is singular");
  }
  return {(b[0] * a[1][1] - a[0][1] * b[1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det};
}

Tensor cholesky(const Tensor& a) {
  require_square(a, "cholesky");
  const std::size_t n = a.rows();
  Tensor lower({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lower(j, k) * lower(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NotPositiveDefinite("cholesky: non-positive pivot at column " + std::to_string(j));
    }
    const double root = std::sqrt(diag);
    lower(j, j) = root;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / root;
    }
  }
  return lower;
}

Tensor cholesky_solve(const Tensor& lower, const Tensor& b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) throw ShapeMismatch("cholesky_solve: rhs length mismatch");
  Tensor y({n});
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * y[k];
    y[i] = s / lower(i, i);
  }
  Tensor x({n});
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * x[k];
    x[i] = s / lower(i, i);
  }
  return x;
}

Tensor symmetric_solve(const Tensor& a, const Tensor& b, std::size_t cap) {
  require_square(a, "symmetric_solve");
  if (a.rows() > cap) {
    throw TooLarge("symmetric_solve: n=" + std::to_string(a.rows()) + " exceeds cap " +
                   std::to_string(cap));
  }
  return cholesky_solve(cholesky(a), b);
}

Tensor identity(std::size_t n) {
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeMismatch("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double x = a(i, l);
      for (std::size_t j = 0; j < m; ++j) out(i, j) += x * b(l, j);
    }
  return out;
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  if (a.cols() != x.size()) {
    throw ShapeMismatch("matvec: " + shape_string(a.shape()) + " x " + shape_string(x.shape()));
  }
  Tensor out({a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

Tensor diagonal(const Tensor& values) {
  const std::size_t n = values.size();
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out(i, i) = values[i];
  return out;
}

Tensor random_orthogonal(std::size_t n, Rng& rng) {
  Tensor q({n, n});
  for (double& x : q) x = rng.normal();
  // Modified Gram-Schmidt on columns, run twice for orthogonality to machine precision.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
      }
      double len = 0.0;
      for (std::size_t i = 0; i < n; ++i) len += q(i, j) * q(i, j);
      len = std::sqrt(len);
      for (std::size_t i = 0; i < n; ++i) q(i, j) /= len;
    }
  }
  return q;
}

EigenRange eigen_range_spd(const Tensor& a, std::size_t iterations) {
  require_square(a, "eigen_range_spd");
  const std::size_t n = a.rows();
  const Tensor lower = cholesky(a);
  auto iterate = [&](auto&& apply) {
    Tensor v({n}, 1.0);
    // A deterministic, non-degenerate start vector.
    for (std::size_t i = 0; i < n; ++i) v[i] += 0.1 * static_cast<double>(i % 7);
    v *= 1.0 / norm(v);
    double estimate = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
      Tensor next = apply(v);
      const double rayleigh = dot(v, next);
      next *= 1.0 / norm(next);
      v = std::move(next);
      if (it > 0 && std::abs(rayleigh - estimate) <= 1e-14 * std::abs(rayleigh)) {
        estimate = rayleigh;
        break;
      }
      estimate = rayleigh;
    }
    return estimate;
  };
  const double largest = iterate([&](const Tensor& v) { return matvec(a, v); });
  const double inverse_largest = iterate([&](const Tensor& v) { return cholesky_solve(lower, v); });
  return {1.0 / inverse_largest, largest};
}

double condition_number(const Tensor& a, std::size_t iterations) {
  require_square(a, "condition_number");
  const auto range = eigen_range_spd(matmul(transpose(a), a), iterations);
  return std::sqrt(range.largest / range.smallest);
}

}  // namespace curveball
