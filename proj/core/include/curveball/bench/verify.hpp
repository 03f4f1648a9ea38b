#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "curveball/autodiff/problem.hpp"

namespace curveball::bench {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  /// Distinct suite names in first-seen order.
  std::vector<std::string> suites() const;
  /// Fixed-width table, one line per check, then a totals line.
  std::string table() const;
};

/// <J_phi^T v, u> == <v, J_phi u> for random v, u; relative error <= tol.
CheckResult check_adjoint(const autodiff::Problem& problem, Rng& rng, std::size_t trials = 5,
                          double tol = 1e-10);

/// Matrix-free Gauss-Newton products against the dense J_phi^T H_L J_phi
/// built from per-coordinate tangents and per-output loss-Hessian columns.
CheckResult check_gauss_newton(const autodiff::Problem& problem, Rng& rng,
                               std::size_t trials = 50, double tol = 1e-8);

/// Symmetry u^T(Cv) == v^T(Cu) and v^T(Cv) >= 0 of the Gauss-Newton product.
CheckResult check_gauss_newton_invariants(const autodiff::Problem& problem, Rng& rng,
                                          std::size_t trials = 20, double tol = 1e-10);

/// Central finite differences of the loss against the gradient at `points`
/// random parameter vectors. Every coordinate is checked when p is small;
/// otherwise a random subset of coordinates plus random directions.
CheckResult check_gradient(const autodiff::Problem& problem, Rng& rng, std::size_t points = 10,
                           double tol = 1e-5);

/// CURVEBALL with zero curvature, lambda = 0, beta = 1, rho = momentum and
/// alpha = lr against momentum SGD, bit for bit over `steps` steps.
CheckResult check_heavy_ball(const autodiff::Problem& problem, std::size_t steps = 100,
                             double lr = 0.01, double momentum = 0.9);

/// The automatic (beta, rho) do not lose to nearby perturbations on the
/// subspace model, for random z.
CheckResult check_auto_hyper(const autodiff::Problem& problem, Rng& rng, std::size_t trials = 20);

/// Pass counters: one CURVEBALL step costs 2 tangent and 1 reverse pass plus
/// one primal pass, and one more every lambda_interval steps.
CheckResult check_pass_budget(const autodiff::Problem& problem, std::size_t steps = 20);

/// Undamped Levenberg on a random PD quadratic lands on the minimizer in one step.
CheckResult check_levenberg_exactness(Rng& rng, std::size_t dim = 20);

/// solve2x2 residuals on random systems and detection of singular ones.
CheckResult check_solve2x2(Rng& rng, std::size_t trials = 1000);

/// BFGS inverse-Hessian symmetry after noisy steps.
CheckResult check_bfgs_symmetry(std::size_t steps = 100);

/// Every suite above on the shipped problems.
VerifyReport verify(std::uint64_t seed = 0);

}  // namespace curveball::bench
