#include <benchmark/benchmark.h>

#include "curveball/autodiff/differentiation.hpp"
#include "curveball/numerics/rng.hpp"
#include "curveball/optim/curveball.hpp"
#include "curveball/optim/sgd.hpp"
#include "curveball/problems/dataset.hpp"
#include "curveball/problems/mlp.hpp"

namespace {

using namespace curveball;

// Same shape as the shipped MLP config, on synthetic blobs.
const problems::MlpProblem& mlp() {
  static const problems::MlpProblem problem = [] {
    Rng rng(1);
    auto data = problems::make_blobs(10, 500, 32, 4.0, rng);
    return problems::make_mlp({32, 128, 64, 32, 10}, problems::Activation::kTanh, std::move(data),
                              100);
  }();
  return problem;
}

void BM_Forward(benchmark::State& state) {
  Rng rng(2);
  const Tensor w = mlp().initial_point(rng);
  const auto batch = mlp().sample_batch(rng);
  for (auto _ : state) benchmark::DoNotOptimize(mlp().evaluate(w, batch)->loss());
}
BENCHMARK(BM_Forward);

void BM_Gradient(benchmark::State& state) {
  Rng rng(2);
  const Tensor w = mlp().initial_point(rng);
  const auto batch = mlp().sample_batch(rng);
  for (auto _ : state) benchmark::DoNotOptimize(mlp().evaluate(w, batch)->gradient());
}
BENCHMARK(BM_Gradient);

void BM_GaussNewtonHvp(benchmark::State& state) {
  Rng rng(2);
  const Tensor w = mlp().initial_point(rng);
  const auto batch = mlp().sample_batch(rng);
  const auto evaluation = mlp().evaluate(w, batch);
  Tensor v({mlp().parameter_count()});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(autodiff::gauss_newton_hvp(*evaluation, v));
}
BENCHMARK(BM_GaussNewtonHvp);

void BM_SgdStep(benchmark::State& state) {
  Rng rng(3);
  Tensor w = mlp().initial_point(rng);
  auto sgd = optim::SgdState::zeros(w.size());
  for (auto _ : state) {
    const auto batch = mlp().sample_batch(rng);
    benchmark::DoNotOptimize(optim::sgd_momentum_step(sgd, mlp(), w, batch, 1e-2, 0.9));
  }
}
BENCHMARK(BM_SgdStep);

void BM_CurveballStep(benchmark::State& state) {
  Rng rng(3);
  Tensor w = mlp().initial_point(rng);
  optim::CurveballOptions options;
  auto cb = optim::CurveballState::initial(w.size(), options);
  for (auto _ : state) {
    const auto batch = mlp().sample_batch(rng);
    benchmark::DoNotOptimize(optim::curveball_step(cb, mlp(), w, batch, options));
  }
}
BENCHMARK(BM_CurveballStep);

}  // namespace

BENCHMARK_MAIN();
