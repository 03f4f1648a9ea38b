#include "curveball/bench/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "curveball/autodiff/differentiation.hpp"
#include "curveball/autodiff/pass_counters.hpp"
#include "curveball/bench/config.hpp"
#include "curveball/errors.hpp"
#include "curveball/numerics/linalg.hpp"
#include "curveball/optim/optimizer.hpp"
#include "curveball/problems/linear_map.hpp"
#include "curveball/problems/mlp.hpp"
#include "curveball/problems/quadratic.hpp"
#include "curveball/problems/rosenbrock.hpp"

namespace curveball::bench {

namespace {

std::string scientific(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3g", value);
  return buffer;
}

Tensor gaussian_like(const Tensor& shape_of, Rng& rng, double scale = 1.0) {
  Tensor out(shape_of.shape());
  for (double& x : out) x = scale * rng.normal();
  return out;
}

Tensor gaussian(std::size_t n, Rng& rng, double scale = 1.0) {
  Tensor out({n});
  for (double& x : out) x = scale * rng.normal();
  return out;
}

double flat_dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeMismatch("flat_dot: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double relative(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

double relative(const Tensor& a, const Tensor& b) {
  const double scale = std::max(norm(a), norm(b));
  if (scale == 0.0) return 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(diff) / scale;
}

// A random point near the problem's start, so fixed starts are not the only
// point checked.
Tensor random_point(const autodiff::Problem& problem, Rng& rng) {
  Tensor w = problem.initial_point(rng);
  for (double& x : w) x += 0.3 * rng.normal();
  return w;
}

CheckResult result(const std::string& suite, const std::string& name, bool passed,
                   const std::string& detail) {
  return {suite, name, passed, detail};
}

template <typename Check>
CheckResult guarded(const std::string& suite, const std::string& name, Check check) {
  try {
    return check();
  } catch (const std::exception& error) {
    return result(suite, name, false, std::string("threw: ") + error.what());
  }
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::vector<std::string> VerifyReport::suites() const {
  std::vector<std::string> out;
  for (const auto& check : checks) {
    if (std::find(out.begin(), out.end(), check.suite) == out.end()) out.push_back(check.suite);
  }
  return out;
}

std::string VerifyReport::table() const {
  std::ostringstream out;
  std::size_t suite_width = 5;
  std::size_t name_width = 5;
  for (const auto& check : checks) {
    suite_width = std::max(suite_width, check.suite.size());
    name_width = std::max(name_width, check.name.size());
  }
  char line[512];
  std::snprintf(line, sizeof line, "%-*s  %-*s  %-4s  %s\n", static_cast<int>(suite_width),
                "suite", static_cast<int>(name_width), "check", "ok", "detail");
  out << line;
  std::size_t failed = 0;
  for (const auto& check : checks) {
    if (!check.passed) ++failed;
    std::snprintf(line, sizeof line, "%-*s  %-*s  %-4s  %s\n", static_cast<int>(suite_width),
                  check.suite.c_str(), static_cast<int>(name_width), check.name.c_str(),
                  check.passed ? "PASS" : "FAIL", check.detail.c_str());
    out << line;
  }
  out << checks.size() - failed << " passed, " << failed << " failed, " << suites().size()
      << " suites\n";
  return out.str();
}

CheckResult check_adjoint(const autodiff::Problem& problem, Rng& rng, std::size_t trials,
                          double tol) {
  const std::string suite = "adjoint";
  return guarded(suite, problem.name(), [&] {
    const Tensor w = random_point(problem, rng);
    const auto evaluation = problem.evaluate(w, problem.sample_batch(rng));
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const Tensor v = gaussian(problem.parameter_count(), rng);
      const Tensor u = gaussian_like(evaluation->outputs(), rng);
      worst = std::max(worst, relative(flat_dot(evaluation->jvp(v), u),
                                       flat_dot(v, evaluation->vjp(u))));
    }
    return result(suite, problem.name(), worst <= tol, "max rel err " + scientific(worst));
  });
}

namespace {

// Dense J_phi^T H_L J_phi: p tangents give J_phi^T, whose columns are pushed
// through H_L one at a time.
Tensor brute_force_gauss_newton(const autodiff::Evaluation& evaluation) {
  const std::size_t p = evaluation.parameter_count();
  std::vector<Tensor> columns;
  columns.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    Tensor e({p});
    e[j] = 1.0;
    columns.push_back(evaluation.jvp(e));
  }
  Tensor h({p, p});
  for (std::size_t j = 0; j < p; ++j) {
    const Tensor hl = evaluation.loss_curvature().apply(columns[j]);
    for (std::size_t i = 0; i < p; ++i) h(i, j) = flat_dot(columns[i], hl);
  }
  return h;
}

}  // namespace

CheckResult check_gauss_newton(const autodiff::Problem& problem, Rng& rng, std::size_t trials,
                               double tol) {
  const std::string suite = "gauss_newton";
  return guarded(suite, problem.name(), [&] {
    const Tensor w = random_point(problem, rng);
    const auto evaluation = problem.evaluate(w, problem.sample_batch(rng));
    const Tensor dense = brute_force_gauss_newton(*evaluation);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const Tensor v = gaussian(problem.parameter_count(), rng);
      const Tensor product = autodiff::gauss_newton_hvp(*evaluation, v).product;
      worst = std::max(worst, relative(product, matvec(dense, v)));
    }
    return result(suite, problem.name() + " brute force", worst <= tol,
                  std::to_string(trials) + " products, max rel err " + scientific(worst));
  });
}

CheckResult check_gauss_newton_invariants(const autodiff::Problem& problem, Rng& rng,
                                          std::size_t trials, double tol) {
  const std::string suite = "gauss_newton";
  return guarded(suite, problem.name() + " symmetric psd", [&] {
    const Tensor w = random_point(problem, rng);
    const auto evaluation = problem.evaluate(w, problem.sample_batch(rng));
    double asymmetry = 0.0;
    double most_negative = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const Tensor u = gaussian(problem.parameter_count(), rng);
      const Tensor v = gaussian(problem.parameter_count(), rng);
      const Tensor hu = autodiff::gauss_newton_hvp(*evaluation, u).product;
      const Tensor hv = autodiff::gauss_newton_hvp(*evaluation, v).product;
      asymmetry = std::max(asymmetry, relative(flat_dot(u, hv), flat_dot(v, hu)));
      const double scale = std::max(1.0, norm(hv) * norm(v));
      most_negative = std::min(most_negative, flat_dot(v, hv) / scale);
    }
    const bool ok = asymmetry <= tol && most_negative >= -tol;
    return result(suite, problem.name() + " symmetric psd", ok,
                  "asymmetry " + scientific(asymmetry) + ", min v'Hv " + scientific(most_negative));
  });
}

CheckResult check_gradient(const autodiff::Problem& problem, Rng& rng, std::size_t points,
                           double tol) {
  const std::string suite = "gradients";
  return guarded(suite, problem.name(), [&] {
    const std::size_t p = problem.parameter_count();
    constexpr std::size_t kAllCoordinates = 300;
    constexpr std::size_t kSampledCoordinates = 40;
    constexpr std::size_t kDirections = 5;
    double worst = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      const Tensor w = random_point(problem, rng);
      const autodiff::Batch batch = problem.sample_batch(rng);
      const Tensor g = problem.evaluate(w, batch)->gradient();
      const double h = 1e-5 * std::max(1.0, max_abs(w));
      auto derivative = [&](const Tensor& direction) {
        Tensor plus = w;
        Tensor minus = w;
        axpy(h, direction, plus);
        axpy(-h, direction, minus);
        return (problem.loss(plus, batch) - problem.loss(minus, batch)) / (2.0 * h);
      };

      std::vector<double> analytic;
      std::vector<double> numeric;
      std::vector<std::size_t> coordinates;
      if (p <= kAllCoordinates) {
        for (std::size_t i = 0; i < p; ++i) coordinates.push_back(i);
      } else {
        for (std::size_t i = 0; i < kSampledCoordinates; ++i) coordinates.push_back(rng.index(p));
      }
      for (std::size_t i : coordinates) {
        Tensor e({p});
        e[i] = 1.0;
        analytic.push_back(g[i]);
        numeric.push_back(derivative(e));
      }
      if (p > kAllCoordinates) {
        for (std::size_t d = 0; d < kDirections; ++d) {
          Tensor v = gaussian(p, rng);
          v *= 1.0 / norm(v);
          analytic.push_back(flat_dot(g, v));
          numeric.push_back(derivative(v));
        }
      }
      worst = std::max(worst, relative(Tensor::vector(analytic), Tensor::vector(numeric)));
    }
    return result(suite, problem.name(), worst <= tol,
                  std::to_string(points) + " points, max rel err " + scientific(worst));
  });
}

CheckResult check_heavy_ball(const autodiff::Problem& problem, std::size_t steps, double lr,
                             double momentum) {
  const std::string suite = "heavy_ball";
  return guarded(suite, problem.name(), [&] {
    const auto sgd = optim::make_optimizer({"sgd", {{"lr", lr}, {"momentum", momentum}}});
    const auto curveball = optim::make_optimizer({"curveball",
                                                  {{"zero_curvature", 1.0},
                                                   {"beta", 1.0},
                                                   {"rho", momentum},
                                                   {"alpha", lr},
                                                   {"lambda", 0.0},
                                                   {"lambda_min", 0.0},
                                                   {"adapt_lambda", 0.0}}});
    Rng sgd_rng = Rng(7).derive(0);
    Rng curveball_rng = Rng(7).derive(0);
    Tensor a = problem.initial_point(sgd_rng);
    Tensor b = problem.initial_point(curveball_rng);
    sgd->reset(problem, a);
    curveball->reset(problem, b);
    for (std::size_t k = 1; k <= steps; ++k) {
      sgd->step(problem, a, sgd_rng);
      curveball->step(problem, b, curveball_rng);
      if (a.size() != b.size() ||
          std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) != 0) {
        return result(suite, problem.name(), false,
                      "iterates differ at step " + std::to_string(k) + " (max diff " +
                          scientific(max_abs(a - b)) + ")");
      }
    }
    return result(suite, problem.name(), true,
                  std::to_string(steps) + " steps bit-identical to momentum SGD");
  });
}

CheckResult check_auto_hyper(const autodiff::Problem& problem, Rng& rng, std::size_t trials) {
  const std::string suite = "auto_hyper";
  return guarded(suite, problem.name(), [&] {
    optim::CurveballOptions options;
    options.lambda_init = 1.0;
    double worst = 0.0;
    std::size_t fallbacks = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const Tensor w = random_point(problem, rng);
      const auto evaluation = problem.evaluate(w, problem.sample_batch(rng));
      auto state = optim::CurveballState::initial(problem.parameter_count(), options);
      state.z = gaussian(problem.parameter_count(), rng, 0.1);
      const auto delta = optim::curveball_delta(*evaluation, state, options);
      const auto dz = evaluation->project(delta.delta);
      const auto model = optim::subspace_model(*evaluation, delta.z_projection, dz, state.lambda);
      const auto hyper = optim::auto_hyper(model, options.beta_default);
      if (hyper.fallback) {
        ++fallbacks;
        continue;
      }
      const double best = model.value(hyper.beta, hyper.rho);
      const double slack = 1e-10 * std::max(1.0, std::abs(best));
      for (double db : {-1e-3, 0.0, 1e-3}) {
        for (double dr : {-1e-3, 0.0, 1e-3}) {
          const double gain = best - model.value(hyper.beta + db, hyper.rho + dr);
          worst = std::max(worst, gain - slack);
        }
      }
    }
    const bool ok = worst <= 0.0 && fallbacks < trials;
    return result(suite, problem.name(), ok,
                  "max improvement by perturbation " + scientific(std::max(worst, 0.0)) + ", " +
                      std::to_string(fallbacks) + " fallbacks");
  });
}

CheckResult check_pass_budget(const autodiff::Problem& problem, std::size_t steps) {
  const std::string suite = "pass_budget";
  return guarded(suite, problem.name(), [&] {
    optim::CurveballOptions options;
    const auto optimizer = optim::make_optimizer({"curveball", {}});
    Rng rng(11);
    Tensor w = problem.initial_point(rng);
    optimizer->reset(problem, w);
    auto& counters = autodiff::pass_counters();
    for (std::size_t k = 1; k <= steps; ++k) {
      const autodiff::PassCounters before = counters;
      optimizer->step(problem, w, rng);
      const autodiff::PassCounters used = counters - before;
      const std::uint64_t primal = k % options.lambda_interval == 0 ? 2 : 1;
      if (used.tangent != 2 || used.reverse != 1 || used.primal != primal) {
        return result(suite, problem.name(), false,
                      "step " + std::to_string(k) + ": primal " + std::to_string(used.primal) +
                          ", tangent " + std::to_string(used.tangent) + ", reverse " +
                          std::to_string(used.reverse));
      }
    }
    return result(suite, problem.name(), true,
                  std::to_string(steps) + " steps of 2 tangent + 1 reverse, extra primal every " +
                      std::to_string(options.lambda_interval));
  });
}

CheckResult check_levenberg_exactness(Rng& rng, std::size_t dim) {
  const std::string suite = "levenberg";
  return guarded(suite, "quadratic one step", [&] {
    const auto problem = problems::make_random_quadratic(dim, 100.0, rng);
    Tensor w = gaussian(dim, rng);
    optim::LevenbergState state{0.0};
    optim::LevenbergOptions options;
    options.adaptive = false;
    optim::levenberg_step(state, problem, w, problem.reference_batch(), options);
    const double gap = problem.reference_loss(w);
    return result(suite, "quadratic one step", gap <= 1e-10,
                  "f - f* after one step " + scientific(gap));
  });
}

CheckResult check_solve2x2(Rng& rng, std::size_t trials) {
  const std::string suite = "linalg";
  return guarded(suite, "solve2x2", [&] {
    double worst = 0.0;
    std::size_t solved = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
      Mat2 a{{{scale * rng.normal(), scale * rng.normal()},
              {scale * rng.normal(), scale * rng.normal()}}};
      const Vec2 b{rng.normal(), rng.normal()};
      try {
        const Vec2 x = solve2x2(a, b);
        ++solved;
        const double r0 = a[0][0] * x[0] + a[0][1] * x[1] - b[0];
        const double r1 = a[1][0] * x[0] + a[1][1] * x[1] - b[1];
        const double bound = 1e-10 * std::max({1.0, std::abs(b[0]), std::abs(b[1])});
        worst = std::max(worst, std::max(std::abs(r0), std::abs(r1)) / bound);
      } catch (const SingularSystem&) {
      }
    }
    bool singular_detected = false;
    try {
      solve2x2({{{1.0, 2.0}, {2.0, 4.0}}}, {1.0, 1.0});
    } catch (const SingularSystem&) {
      singular_detected = true;
    }
    const bool ok = worst <= 1.0 && singular_detected && solved > trials / 2;
    return result(suite, "solve2x2", ok,
                  std::to_string(solved) + " solved, max residual/bound " + scientific(worst) +
                      (singular_detected ? ", singular detected" : ", singular missed"));
  });
}

CheckResult check_bfgs_symmetry(std::size_t steps) {
  const std::string suite = "bfgs";
  return guarded(suite, "symmetry", [&] {
    const problems::RosenbrockProblem problem({0.0, 3.0});
    Rng rng(5);
    Tensor w = problem.initial_point(rng);
    auto state = optim::BfgsState::identity(2);
    for (std::size_t k = 0; k < steps; ++k) {
      try {
        optim::bfgs_step(state, problem, w, problem.sample_batch(rng), {}, &rng);
      } catch (const LineSearchFailed&) {
        state.reset();
      }
    }
    const Tensor& b = state.inverse_hessian;
    const double asymmetry = max_abs(b - transpose(b));
    const bool ok = asymmetry <= 1e-10 * max_abs(b);
    return result(suite, "symmetry", ok,
                  "|B - B'| " + scientific(asymmetry) + " after " + std::to_string(steps) +
                      " noisy steps, " + std::to_string(state.updates) + " updates");
  });
}

VerifyReport verify(std::uint64_t seed) {
  Rng rng(seed);
  VerifyReport report;
  auto add = [&](CheckResult check) { report.checks.push_back(std::move(check)); };
  auto add_as = [&](CheckResult check, const std::string& name) {
    check.name = name + check.name.substr(std::min(check.name.size(), check.name.find(' ')));
    report.checks.push_back(std::move(check));
  };

  Rng data_rng = rng.derive(1);
  const problems::MlpProblem small_tanh =
      problems::make_mlp({6, 12, 6, 4}, problems::Activation::kTanh,
                         problems::make_blobs(4, 10, 6, 3.0, data_rng), 16);
  const problems::MlpProblem small_relu =
      problems::make_mlp({6, 10, 4}, problems::Activation::kRelu,
                         problems::make_blobs(4, 10, 6, 3.0, data_rng), 16);
  Rng map_rng = rng.derive(2);
  const problems::LinearMapProblem linear_map(gaussian(20, map_rng).reshaped({5, 4}),
                                              gaussian(5, map_rng));

  std::vector<std::unique_ptr<autodiff::Problem>> shipped;
  {
    ProblemSpec spec;
    spec.seed = seed;
    for (const char* name : {"rosenbrock", "quadratic", "rahimi_recht", "mlp"}) {
      spec.name = name;
      shipped.push_back(make_problem(spec));
    }
    spec.name = "rosenbrock";
    spec.noise = {0.0, 3.0};
    shipped.push_back(make_problem(spec));
  }
  const autodiff::Problem& rahimi_recht = *shipped[2];
  const autodiff::Problem& mlp = *shipped[3];

  Rng linalg_rng = rng.derive(3);
  add(check_solve2x2(linalg_rng));

  Rng adjoint_rng = rng.derive(4);
  add_as(check_adjoint(small_tanh, adjoint_rng), "mlp_tanh_small");
  add_as(check_adjoint(small_relu, adjoint_rng), "mlp_relu_small");
  add(check_adjoint(linear_map, adjoint_rng));
  add(check_adjoint(rahimi_recht, adjoint_rng));
  add(check_adjoint(*shipped[0], adjoint_rng));
  add(check_adjoint(*shipped[1], adjoint_rng));

  Rng gn_rng = rng.derive(5);
  add_as(check_gauss_newton(small_tanh, gn_rng), "mlp_tanh_small");
  add(check_gauss_newton(rahimi_recht, gn_rng, 10));
  add_as(check_gauss_newton_invariants(small_tanh, gn_rng), "mlp_tanh_small");
  add(check_gauss_newton_invariants(rahimi_recht, gn_rng));

  Rng gradient_rng = rng.derive(6);
  for (std::size_t i = 0; i + 1 < shipped.size(); ++i) add(check_gradient(*shipped[i], gradient_rng));
  add_as(check_gradient(*shipped.back(), gradient_rng), "rosenbrock_noisy");
  add_as(check_gradient(small_tanh, gradient_rng), "mlp_tanh_small");
  add_as(check_gradient(small_relu, gradient_rng), "mlp_relu_small");
  add(check_gradient(linear_map, gradient_rng));

  add(check_heavy_ball(mlp));

  Rng hyper_rng = rng.derive(7);
  add_as(check_auto_hyper(small_tanh, hyper_rng), "mlp_tanh_small");
  add(check_auto_hyper(*shipped[1], hyper_rng));

  add_as(check_pass_budget(small_tanh), "mlp_tanh_small");
  add(check_pass_budget(*shipped[0]));

  Rng levenberg_rng = rng.derive(8);
  add(check_levenberg_exactness(levenberg_rng));
  add(check_bfgs_symmetry());
  return report;
}

}  // namespace curveball::bench
