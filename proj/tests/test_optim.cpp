#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "curveball/autodiff/differentiation.hpp"
#include "curveball/autodiff/pass_counters.hpp"
#include "curveball/errors.hpp"
#include "curveball/optim/adam.hpp"
#include "curveball/optim/bfgs.hpp"
#include "curveball/optim/curveball.hpp"
#include "curveball/optim/levenberg.hpp"
#include "curveball/optim/optimizer.hpp"
#include "curveball/optim/sgd.hpp"
#include "curveball/problems/quadratic.hpp"
#include "curveball/problems/rosenbrock.hpp"
#include "support.hpp"

using namespace curveball;
using namespace curveball::optim;
using curveball::autodiff::Batch;
using curveball::autodiff::pass_counters;
using curveball::autodiff::PassCounters;
using testing_support::gaussian;
using testing_support::relative_error;

namespace {

problems::QuadraticProblem scalar_quadratic(double h) {
  return problems::QuadraticProblem(Tensor::matrix({{h}}), Tensor::vector({0}));
}

// Dense J_phi^T H_L J_phi from per-coordinate tangents.
Tensor dense_gauss_newton(const autodiff::Evaluation& evaluation) {
  const std::size_t p = evaluation.parameter_count();
  const std::size_t o = evaluation.outputs().size();
  Tensor j({o, p});
  for (std::size_t i = 0; i < p; ++i) {
    Tensor e({p});
    e[i] = 1.0;
    const Tensor column = evaluation.jvp(e);
    for (std::size_t r = 0; r < o; ++r) j(r, i) = column[r];
  }
  const Tensor h = testing_support::softmax_hessian(evaluation.outputs());
  return matmul(transpose(j), matmul(h, j));
}

double model_value(const Tensor& dense, const Tensor& gradient, double lambda, const Tensor& z) {
  return dot(gradient, z) + 0.5 * (dot(z, matvec(dense, z)) + lambda * dot(z, z));
}

CurveballOptions heavy_ball_options(double lr, double momentum) {
  CurveballOptions options;
  options.auto_hyper = false;
  options.beta = 1.0;
  options.rho = momentum;
  options.alpha = lr;
  options.lambda_init = 0.0;
  options.lambda_min = 0.0;
  options.adapt_lambda = false;
  options.zero_curvature = true;
  return options;
}

}  // namespace

TEST(Sgd, ZeroMomentumIsGradientDescent) {
  Rng rng(1);
  const auto q = problems::make_random_quadratic(5, 10, rng);
  Tensor w = gaussian(5, rng);
  const Tensor expected = w - 0.1 * q.evaluate(w, {})->gradient();
  SgdState state = SgdState::zeros(5);
  sgd_momentum_step(state, q, w, {}, 0.1, 0.0);
  EXPECT_EQ(w, expected);
}

TEST(Sgd, ZeroGradientDecaysVelocity) {
  const problems::QuadraticProblem q(identity(2), Tensor::vector({1, 2}));
  Tensor w = Tensor::vector({1, 2});
  SgdState state{Tensor::vector({0.5, -1})};
  sgd_momentum_step(state, q, w, {}, 0.1, 0.9);
  EXPECT_EQ(state.z, Tensor::vector({0.9 * 0.5, 0.9 * -1}));
  EXPECT_EQ(w, Tensor::vector({1 + 0.1 * (0.9 * 0.5), 2 + 0.1 * (0.9 * -1)}));
}

TEST(Sgd, MatchesScalarRecurrenceOnHalfSquare) {
  const auto q = scalar_quadratic(1.0);
  Tensor w = Tensor::vector({1.0});
  SgdState state = SgdState::zeros(1);
  double ref_w = 1.0, ref_z = 0.0;
  for (int t = 0; t < 200; ++t) {
    sgd_momentum_step(state, q, w, {}, 0.1, 0.9);
    ref_z = 0.9 * ref_z - ref_w;
    ref_w += 0.1 * ref_z;
  }
  EXPECT_DOUBLE_EQ(w[0], ref_w);
  EXPECT_LT(std::abs(w[0]), 1e-3);
}

TEST(Adam, FirstStepMovesEachCoordinateByAlpha) {
  const problems::QuadraticProblem q(diagonal(Tensor::vector({1, 100, 0.01})),
                                     Tensor::vector({0, 0, 0}));
  Tensor w = Tensor::vector({1, -2, 3});
  const Tensor w0 = w;
  AdamState state = AdamState::zeros(3);
  AdamOptions options;
  options.alpha = 0.01;
  adam_step(state, q, w, {}, options);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(w[i] - w0[i]), 0.01, 1e-6);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Tensor w = Tensor::vector({0.3, -0.2});
  const Tensor w0 = w;
  AdamState state = AdamState::zeros(2);
  adam_update(state, Tensor({2}), w, {});
  EXPECT_EQ(w, w0);
}

TEST(Adam, MatchesHandRolledReference) {
  const std::vector<double> grads = {0.5, -1.2, 3.0, 0.01, -0.7};
  AdamOptions options;
  options.alpha = 0.05;
  Tensor w = Tensor::vector({1.0});
  AdamState state = AdamState::zeros(1);
  double x = 1.0, m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    adam_update(state, Tensor::vector({g}), w, options);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double m_hat = m / (1 - std::pow(0.9, t));
    const double v_hat = v / (1 - std::pow(0.999, t));
    x -= 0.05 * m_hat / (std::sqrt(v_hat) + 1e-8);
    EXPECT_NEAR(w[0], x, 1e-12);
  }
}

TEST(Levenberg, IdentityCurvatureIsPureNewton) {
  const problems::QuadraticProblem q(identity(3), Tensor::vector({1, -2, 0.5}));
  Tensor w = Tensor::vector({4, 4, 4});
  const Tensor expected = w - q.evaluate(w, {})->gradient();
  LevenbergState state{0.0};
  LevenbergOptions options;
  options.adaptive = false;
  levenberg_step(state, q, w, {}, options);
  EXPECT_EQ(w, expected);
}

TEST(Levenberg, HeavyDampingShrinksTowardNegativeGradient) {
  Rng rng(2);
  const auto q = problems::make_random_quadratic(4, 10, rng);
  Tensor w = gaussian(4, rng);
  const Tensor w0 = w;
  const Tensor gradient = q.evaluate(w, {})->gradient();
  LevenbergState state{1e8};
  LevenbergOptions options;
  options.adaptive = false;
  levenberg_step(state, q, w, {}, options);
  EXPECT_LE(relative_error(1e8 * (w - w0), -gradient), 1e-6);
}

TEST(Levenberg, OneUndampedStepSolvesAQuadratic) {
  Rng rng(3);
  const auto q = problems::make_random_quadratic(10, 1000, rng);
  Tensor w = gaussian(10, rng);
  LevenbergState state{0.0};
  LevenbergOptions options;
  options.adaptive = false;
  levenberg_step(state, q, w, {}, options);
  EXPECT_LE(max_abs(w - q.minimizer()), 1e-10);
}

TEST(Levenberg, IndefiniteCurvatureRaisesDamping) {
  const problems::RosenbrockProblem f;
  Tensor w = Tensor::vector({0.0, 1.0});  // Hessian is indefinite here
  LevenbergState state{0.0};
  LevenbergOptions options;
  options.adaptive = false;
  levenberg_step(state, f, w, {{}, 1.0}, options);
  EXPECT_GT(state.lambda, 0.0);
  options.max_retries = 0;
  state.lambda = 0.0;
  Tensor again = Tensor::vector({0.0, 1.0});
  EXPECT_THROW(levenberg_step(state, f, again, {{}, 1.0}, options), DampingExhausted);
}

TEST(Bfgs, FirstStepIsSteepestDescent) {
  Rng rng(4);
  const auto q = problems::make_random_quadratic(5, 10, rng);
  Tensor w = gaussian(5, rng);
  const Tensor w0 = w;
  const Tensor gradient = q.evaluate(w, {})->gradient();
  BfgsState state = BfgsState::identity(5);
  bfgs_step(state, q, w, {});
  const Tensor s = w - w0;
  EXPECT_NEAR(dot(s, -1.0 * gradient), norm(s) * norm(gradient), 1e-12 * norm(s) * norm(gradient));
}

TEST(Bfgs, ConvexQuadraticConvergesQuickly) {
  // Unit steps that already satisfy the Wolfe conditions are accepted, so
  // exact finite termination is not guaranteed; most instances finish in p+2.
  std::vector<double> counts;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto q = problems::make_random_quadratic(5, 10, rng);
    Tensor w = gaussian(5, rng);
    BfgsState state = BfgsState::identity(5);
    int steps = 0;
    while (norm(q.evaluate(w, {})->gradient()) >= 1e-8 && steps < 50) {
      bfgs_step(state, q, w, {});
      ++steps;
    }
    EXPECT_LE(steps, 15) << "seed " << seed;
    counts.push_back(steps);
  }
  std::sort(counts.begin(), counts.end());
  EXPECT_LE(counts[counts.size() / 2], 7.0);
}

TEST(Bfgs, UpdateSkippedExactlyWhenCurvatureConditionFails) {
  Tensor b = identity(2);
  EXPECT_FALSE(bfgs_update(b, Tensor::vector({1, 0}), Tensor::vector({-1, 0}), 1e-10));
  EXPECT_EQ(b, identity(2));
  EXPECT_TRUE(bfgs_update(b, Tensor::vector({1, 0}), Tensor::vector({2, 1}), 1e-10));
  EXPECT_EQ(b, transpose(b));
  EXPECT_NE(b, identity(2));
}

TEST(Bfgs, InverseStaysSymmetricUnderNoise) {
  const problems::RosenbrockProblem f(problems::NoiseSpec{0, 3});
  Rng rng(6);
  Tensor w = f.initial_point(rng);
  BfgsState state = BfgsState::identity(2);
  for (int t = 0; t < 100; ++t) {
    try {
      bfgs_step(state, f, w, f.sample_batch(rng), {}, &rng);
    } catch (const LineSearchFailed&) {
      state.reset();
    }
    const Tensor& b = state.inverse_hessian;
    ASSERT_LE(max_abs(b - transpose(b)), 1e-10 * max_abs(b));
  }
}

TEST(Bfgs, CubicMinimizerOfAParabola) {
  // f(x) = (x - 1)^2 sampled at 0 and 3.
  EXPECT_NEAR(cubic_minimizer(0, 1, -2, 3, 4, 4), 1.0, 1e-12);
}

TEST(CurveballDelta, ZeroStateGivesGradient) {
  Rng rng(7);
  const auto mlp = testing_support::tiny_mlp(rng);
  const Tensor w = mlp.initial_point(rng);
  const auto evaluation = mlp.evaluate(w, mlp.sample_batch(rng));
  const auto state = CurveballState::initial(w.size());
  EXPECT_LE(relative_error(curveball_delta(*evaluation, state).delta, evaluation->gradient()),
            1e-15);
}

TEST(CurveballDelta, ScalarQuadratic) {
  const auto q = scalar_quadratic(3.0);
  const auto evaluation = q.evaluate(Tensor::vector({2.0}), {});
  CurveballState state = CurveballState::initial(1);
  state.lambda = 0.0;
  state.z = Tensor::vector({-0.5});
  EXPECT_DOUBLE_EQ(curveball_delta(*evaluation, state).delta[0], 3.0 * -0.5 + 3.0 * 2.0);
}

TEST(CurveballDelta, MatchesBruteForceGaussNewton) {
  Rng rng(8);
  const auto mlp = testing_support::tiny_mlp(rng);
  const Tensor w = mlp.initial_point(rng);
  const auto evaluation = mlp.evaluate(w, mlp.sample_batch(rng));
  const Tensor dense = dense_gauss_newton(*evaluation);
  CurveballState state = CurveballState::initial(w.size());
  state.lambda = 0.7;
  state.z = gaussian(w.size(), rng, 0.1);
  const Tensor expected = matvec(dense, state.z) + 0.7 * state.z + evaluation->gradient();
  EXPECT_LE(relative_error(curveball_delta(*evaluation, state).delta, expected), 1e-8);
}

TEST(AutoHyper, FirstIterationFallsBackToLineMinimization) {
  SubspaceModel model;
  model.dz_c_dz = 4.0;
  model.g_dz = 2.0;
  const AutoHyper hyper = auto_hyper(model);
  EXPECT_TRUE(hyper.fallback);
  EXPECT_DOUBLE_EQ(hyper.beta, 0.5);
  EXPECT_EQ(hyper.rho, 0.0);
}

TEST(AutoHyper, NonPositiveCurvatureUsesDefaultBeta) {
  SubspaceModel model;
  model.g_dz = 2.0;
  const AutoHyper hyper = auto_hyper(model, 1e-3);
  EXPECT_TRUE(hyper.fallback);
  EXPECT_EQ(hyper.beta, 1e-3);
}

TEST(AutoHyper, ScalarQuadraticConvergesInOneStep) {
  const double h = 4.0, w0 = 1.5;
  const auto q = scalar_quadratic(h);
  CurveballOptions options;
  options.lambda_init = 0.0;
  options.lambda_min = 0.0;
  CurveballState state = CurveballState::initial(1, options);
  Tensor w = Tensor::vector({w0});
  const StepInfo info = curveball_step(state, q, w, {}, options);
  EXPECT_DOUBLE_EQ(info.beta, 1.0 / h);
  EXPECT_DOUBLE_EQ(state.z[0], -w0);
  EXPECT_EQ(w[0], 0.0);
}

TEST(AutoHyper, PerturbationsNeverLowerTheModel) {
  Rng rng(9);
  const auto mlp = testing_support::tiny_mlp(rng);
  const Tensor w = mlp.initial_point(rng);
  const auto evaluation = mlp.evaluate(w, mlp.sample_batch(rng));
  for (int t = 0; t < 20; ++t) {
    CurveballState state = CurveballState::initial(w.size());
    state.lambda = 0.5;
    state.z = gaussian(w.size(), rng, 0.1);
    const auto delta = curveball_delta(*evaluation, state);
    const auto model = subspace_model(*evaluation, delta.z_projection,
                                      evaluation->project(delta.delta), state.lambda);
    const AutoHyper hyper = auto_hyper(model);
    ASSERT_FALSE(hyper.fallback);
    const double best = model.value(hyper.beta, hyper.rho);
    for (double db : {-1e-3, 1e-3}) {
      EXPECT_GE(model.value(hyper.beta + db, hyper.rho), best - 1e-10 * std::abs(best));
      EXPECT_GE(model.value(hyper.beta, hyper.rho + db), best - 1e-10 * std::abs(best));
    }
  }
}

TEST(AutoHyper, SubspaceModelMatchesDenseQuadratic) {
  Rng rng(10);
  const auto mlp = testing_support::tiny_mlp(rng);
  const Tensor w = mlp.initial_point(rng);
  const auto evaluation = mlp.evaluate(w, mlp.sample_batch(rng));
  const Tensor dense = dense_gauss_newton(*evaluation);
  const Tensor z = gaussian(w.size(), rng), dz = gaussian(w.size(), rng);
  const auto model = subspace_model(*evaluation, evaluation->project(z), evaluation->project(dz), 2.0);
  const double beta = 0.3, rho = 0.8;
  const double expected = model_value(dense, evaluation->gradient(), 2.0, rho * z - beta * dz);
  EXPECT_NEAR(model.value(beta, rho), expected, 1e-10 * std::abs(expected));
}

TEST(Curveball, StepDescendsOnTheSubproblem) {
  Rng rng(11);
  const auto mlp = testing_support::tiny_mlp(rng);
  Tensor w = mlp.initial_point(rng);
  CurveballOptions options;
  options.adapt_lambda = false;
  CurveballState state = CurveballState::initial(w.size(), options);
  for (int t = 0; t < 10; ++t) {
    const Batch batch = mlp.sample_batch(rng);
    const auto evaluation = mlp.evaluate(w, batch);
    const Tensor dense = dense_gauss_newton(*evaluation);
    const Tensor gradient = evaluation->gradient();
    const Tensor z_old = state.z;
    curveball_step(state, mlp, w, batch, options);
    EXPECT_LE(model_value(dense, gradient, state.lambda, state.z),
              model_value(dense, gradient, state.lambda, z_old) + 1e-12);
  }
}

TEST(Curveball, HeavyBallReductionIsBitIdentical) {
  Rng rng(12);
  const auto mlp = testing_support::tiny_mlp(rng);
  const Tensor w0 = mlp.initial_point(rng);
  Tensor a = w0, b = w0;
  const CurveballOptions options = heavy_ball_options(0.01, 0.9);
  CurveballState cb = CurveballState::initial(w0.size(), options);
  SgdState sgd = SgdState::zeros(w0.size());
  Rng batches_a(13), batches_b(13);
  for (int t = 0; t < 100; ++t) {
    curveball_step(cb, mlp, a, mlp.sample_batch(batches_a), options);
    sgd_momentum_step(sgd, mlp, b, mlp.sample_batch(batches_b), 0.01, 0.9);
    ASSERT_EQ(std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)), 0)
        << "diverged at step " << t;
  }
}

TEST(Curveball, PassBudgetPerStep) {
  Rng rng(14);
  const auto mlp = testing_support::tiny_mlp(rng);
  Tensor w = mlp.initial_point(rng);
  CurveballState state = CurveballState::initial(w.size());
  for (int t = 1; t <= 15; ++t) {
    const Batch batch = mlp.sample_batch(rng);
    const PassCounters before = pass_counters();
    curveball_step(state, mlp, w, batch);
    const PassCounters used = pass_counters() - before;
    EXPECT_EQ(used.tangent, 2u);
    EXPECT_EQ(used.reverse, 1u);
    EXPECT_EQ(used.primal, t % 5 == 0 ? 2u : 1u) << "step " << t;
  }
}

TEST(Curveball, ConvexQuadraticDescendsMonotonicallyToOptimum) {
  // With exact curvature and no damping each step minimizes the quadratic over
  // a plane containing the zero update, so the loss can never increase.
  Rng rng(15);
  const auto q = problems::make_random_quadratic(20, 10, rng);
  Tensor w = q.initial_point(rng);
  CurveballOptions options;
  options.lambda_init = 0.0;
  options.lambda_min = 0.0;
  CurveballState state = CurveballState::initial(20, options);
  double previous = q.reference_loss(w);
  int steps = 0;
  while (previous > 1e-12 && steps < 400) {
    curveball_step(state, q, w, {}, options);
    const double current = q.reference_loss(w);
    EXPECT_LE(current, previous * (1.0 + 1e-12) + 1e-15) << "step " << steps;
    previous = current;
    ++steps;
  }
  EXPECT_LE(previous, 1e-12);
  // Dense-solver oracle for the minimizer.
  const Tensor solved = symmetric_solve(q.hessian(), matvec(q.hessian(), q.minimizer()));
  EXPECT_LE(max_abs(w - solved), 1e-4);
}

TEST(LambdaUpdate, ThresholdsAndClamp) {
  CurveballOptions options;
  CurveballState state = CurveballState::initial(1, options);
  EXPECT_DOUBLE_EQ(lambda_update(state, 1.6, options), 10.0 * 0.999);
  state.lambda = 10.0;
  EXPECT_DOUBLE_EQ(lambda_update(state, 0.4, options), 10.0 / 0.999);
  state.lambda = 10.0;
  EXPECT_EQ(lambda_update(state, 1.0, options), 10.0);
  EXPECT_EQ(lambda_update(state, 1.5, options), 10.0);
  EXPECT_EQ(lambda_update(state, 0.5, options), 10.0);
  state.lambda = options.lambda_max;
  EXPECT_EQ(lambda_update(state, 0.1, options), options.lambda_max);
  state.lambda = options.lambda_min;
  EXPECT_EQ(lambda_update(state, 10.0, options), options.lambda_min);
}

TEST(Curveball, LambdaStaysInBoundsAndGammaIsReported) {
  const problems::RosenbrockProblem f(problems::NoiseSpec{0, 3});
  Rng rng(16);
  Tensor w = f.initial_point(rng);
  CurveballOptions options;
  options.lambda_factor = 0.5;  // exaggerated so the clamp is exercised
  options.lambda_min = 1e-3;
  options.lambda_max = 1e3;
  CurveballState state = CurveballState::initial(2, options);
  for (int t = 1; t <= 200; ++t) {
    const StepInfo info = curveball_step(state, f, w, f.sample_batch(rng), options);
    ASSERT_GE(state.lambda, options.lambda_min);
    ASSERT_LE(state.lambda, options.lambda_max);
    if (t % 5 != 0) {
      EXPECT_TRUE(std::isnan(info.gamma));
    }
  }
}

TEST(Optimizers, FactoryBuildsEveryName) {
  for (const char* name : {"sgd", "adam", "levenberg", "bfgs", "curveball"}) {
    EXPECT_EQ(make_optimizer({name, {}})->name(), name);
  }
  EXPECT_THROW(make_optimizer({"lbfgs", {}}), ConfigError);
  EXPECT_THROW(make_optimizer({"sgd", {{"momentum", 1.0}}}), ConfigError);
  EXPECT_THROW(make_optimizer({"sgd", {{"mystery", 1.0}}}), ConfigError);
}

TEST(Optimizers, CurveballUsesProblemDampingHintUnlessLambdaGiven) {
  const problems::RosenbrockProblem f;
  Rng rng(17);
  auto hinted = make_optimizer({"curveball", {}});
  hinted->reset(f, f.initial_point(rng));
  EXPECT_EQ(dynamic_cast<CurveballOptimizer&>(*hinted).state().lambda, 0.1);
  auto explicit_lambda = make_optimizer({"curveball", {{"lambda", 10.0}}});
  explicit_lambda->reset(f, f.initial_point(rng));
  EXPECT_EQ(dynamic_cast<CurveballOptimizer&>(*explicit_lambda).state().lambda, 10.0);
  const auto q = problems::make_random_quadratic(3, 2, rng);
  auto plain = make_optimizer({"curveball", {}});
  plain->reset(q, q.initial_point(rng));
  EXPECT_EQ(dynamic_cast<CurveballOptimizer&>(*plain).state().lambda, 10.0);
}
