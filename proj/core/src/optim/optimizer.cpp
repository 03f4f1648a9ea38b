#include "curveball/optim/optimizer.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "curveball/errors.hpp"

namespace curveball::optim {

std::string OptimizerSpec::label() const {
  std::ostringstream out;
  out.precision(6);
  out << name;
  if (!params.empty()) {
    out << '(';
    bool first = true;
    for (const auto& [key, value] : params) {
      if (!first) out << ',';
      first = false;
      out << key << '=' << value;
    }
    out << ')';
  }
  return out.str();
}

void SgdOptimizer::reset(const autodiff::Problem&, const Tensor& w0) {
  state_ = SgdState::zeros(w0.size());
}

StepInfo SgdOptimizer::step(const autodiff::Problem& problem, Tensor& w, Rng& rng) {
  return sgd_momentum_step(state_, problem, w, problem.sample_batch(rng), lr_, momentum_);
}

void AdamOptimizer::reset(const autodiff::Problem&, const Tensor& w0) {
  state_ = AdamState::zeros(w0.size());
}

StepInfo AdamOptimizer::step(const autodiff::Problem& problem, Tensor& w, Rng& rng) {
  return adam_step(state_, problem, w, problem.sample_batch(rng), options_);
}

void LevenbergOptimizer::reset(const autodiff::Problem&, const Tensor&) {
  state_ = LevenbergState{lambda_init_};
}

StepInfo LevenbergOptimizer::step(const autodiff::Problem& problem, Tensor& w, Rng& rng) {
  return levenberg_step(state_, problem, w, problem.sample_batch(rng), options_);
}

void BfgsOptimizer::reset(const autodiff::Problem&, const Tensor& w0) {
  state_ = BfgsState::identity(w0.size());
}

StepInfo BfgsOptimizer::step(const autodiff::Problem& problem, Tensor& w, Rng& rng) {
  const autodiff::Batch batch = problem.sample_batch(rng);
  try {
    return bfgs_step(state_, problem, w, batch, options_, &rng);
  } catch (const LineSearchFailed&) {
    state_.reset();
    StepInfo info;
    info.loss = problem.loss(w, batch);
    info.rejected = true;
    return info;
  }
}

void CurveballOptimizer::reset(const autodiff::Problem& problem, const Tensor& w0) {
  CurveballOptions options = options_;
  if (options.problem_damping) {
    if (const auto hint = problem.initial_damping()) {
      options.lambda_init = std::clamp(*hint, options.lambda_min, options.lambda_max);
    }
  }
  state_ = CurveballState::initial(w0.size(), options);
}

StepInfo CurveballOptimizer::step(const autodiff::Problem& problem, Tensor& w, Rng& rng) {
  return curveball_step(state_, problem, w, problem.sample_batch(rng), options_);
}

namespace {

class ParamReader {
 public:
  explicit ParamReader(const OptimizerSpec& spec) : spec_(spec) {}

  double get(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = spec_.params.find(key);
    return it == spec_.params.end() ? fallback : it->second;
  }
  bool has(const std::string& key) const { return spec_.params.count(key) != 0; }
  bool flag(const std::string& key, bool fallback) { return get(key, fallback ? 1.0 : 0.0) != 0.0; }

  void finish() const {
    for (const auto& [key, value] : spec_.params) {
      if (!used_.count(key)) {
        throw ConfigError("optimizer '" + spec_.name + "' has no parameter '" + key + "'");
      }
    }
  }

 private:
  const OptimizerSpec& spec_;
  std::set<std::string> used_;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec) {
  ParamReader params(spec);
  std::unique_ptr<Optimizer> out;
  if (spec.name == "sgd") {
    const double lr = params.get("lr", 1e-3);
    const double momentum = params.get("momentum", 0.9);
    if (!(lr > 0.0) || !(momentum >= 0.0 && momentum < 1.0)) {
      throw ConfigError("sgd: need lr > 0 and 0 <= momentum < 1");
    }
    out = std::make_unique<SgdOptimizer>(lr, momentum);
  } else if (spec.name == "adam") {
    AdamOptions options;
    options.alpha = params.get("lr", options.alpha);
    options.beta1 = params.get("beta1", options.beta1);
    options.beta2 = params.get("beta2", options.beta2);
    options.eps = params.get("eps", options.eps);
    if (!(options.alpha > 0.0)) throw ConfigError("adam: lr must be > 0");
    out = std::make_unique<AdamOptimizer>(options);
  } else if (spec.name == "levenberg") {
    LevenbergOptions options;
    const double lambda = params.get("lambda", 1e-3);
    options.alpha = params.get("alpha", options.alpha);
    options.adaptive = params.flag("adaptive", options.adaptive);
    options.max_retries = static_cast<int>(params.get("max_retries", options.max_retries));
    if (!(lambda >= 0.0)) throw ConfigError("levenberg: lambda must be >= 0");
    out = std::make_unique<LevenbergOptimizer>(lambda, options);
  } else if (spec.name == "bfgs") {
    BfgsOptions options;
    options.c1 = params.get("c1", options.c1);
    options.c2 = params.get("c2", options.c2);
    options.max_evaluations = static_cast<int>(params.get("max_evals", options.max_evaluations));
    options.initial_step = params.get("initial_step", options.initial_step);
    if (!(0.0 < options.c1 && options.c1 < options.c2 && options.c2 < 1.0)) {
      throw ConfigError("bfgs: need 0 < c1 < c2 < 1");
    }
    out = std::make_unique<BfgsOptimizer>(options);
  } else if (spec.name == "curveball") {
    CurveballOptions options;
    options.problem_damping = !params.has("lambda");
    options.lambda_init = params.get("lambda", options.lambda_init);
    options.lambda_min = params.get("lambda_min", options.lambda_min);
    options.lambda_max = params.get("lambda_max", options.lambda_max);
    options.lambda_factor = params.get("lambda_factor", options.lambda_factor);
    options.lambda_interval =
        static_cast<std::size_t>(params.get("lambda_interval", options.lambda_interval));
    options.adapt_lambda = params.flag("adapt_lambda", options.adapt_lambda);
    options.alpha = params.get("alpha", options.alpha);
    const bool fixed = params.has("beta") || params.has("rho");
    options.beta = params.get("beta", options.beta);
    options.rho = params.get("rho", options.rho);
    options.auto_hyper = params.flag("auto", !fixed);
    options.damped_hyper = params.flag("damped_hyper", options.damped_hyper);
    options.beta_default = params.get("beta_default", options.beta_default);
    options.zero_curvature = params.flag("zero_curvature", options.zero_curvature);
    if (!(options.lambda_min <= options.lambda_init && options.lambda_init <= options.lambda_max)) {
      throw ConfigError("curveball: need lambda_min <= lambda <= lambda_max");
    }
    out = std::make_unique<CurveballOptimizer>(options);
  } else {
    throw ConfigError("unknown optimizer '" + spec.name + "'");
  }
  params.finish();
  return out;
}

}  // namespace curveball::optim
