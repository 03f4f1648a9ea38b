#include "curveball/bench/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "curveball/errors.hpp"
#include "curveball/problems/idx.hpp"
#include "curveball/problems/mlp.hpp"
#include "curveball/problems/quadratic.hpp"
#include "curveball/problems/rahimi_recht.hpp"

namespace curveball::bench {

using nlohmann::json;

namespace {

class Params {
 public:
  Params(const std::string& owner, const std::map<std::string, double>& values)
      : owner_(owner), values_(values) {}

  double get(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const double value = get(key, static_cast<double>(fallback));
    if (!(value >= 0.0) || value != std::floor(value)) {
      throw ConfigError(owner_ + ": '" + key + "' must be a non-negative integer");
    }
    return static_cast<std::size_t>(value);
  }

  void finish() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key)) throw ConfigError(owner_ + " has no parameter '" + key + "'");
    }
  }

 private:
  std::string owner_;
  const std::map<std::string, double>& values_;
  std::set<std::string> used_;
};

}  // namespace

std::string ProblemSpec::label() const {
  if (name == "rosenbrock" && !noise.deterministic()) {
    std::ostringstream out;
    out << "rosenbrock(U[" << noise.lo << "," << noise.hi << "])";
    return out.str();
  }
  return name;
}

std::unique_ptr<autodiff::Problem> make_problem(const ProblemSpec& spec) {
  Params params(spec.name, spec.params);
  Rng rng(spec.seed);
  std::unique_ptr<autodiff::Problem> out;
  if (spec.name == "rosenbrock") {
    spec.noise.validate();
    out = std::make_unique<problems::RosenbrockProblem>(spec.noise);
  } else if (spec.name == "quadratic") {
    const std::size_t dim = params.count("dim", 20);
    const double condition = params.get("condition", 100.0);
    out = std::make_unique<problems::QuadraticProblem>(
        problems::make_random_quadratic(dim, condition, rng));
  } else if (spec.name == "rahimi_recht") {
    problems::RahimiRechtOptions options;
    options.d_in = params.count("d_in", options.d_in);
    options.hidden = params.count("hidden", options.hidden);
    options.d_out = params.count("d_out", options.d_out);
    options.samples = params.count("samples", options.samples);
    options.kappa = params.get("kappa", options.kappa);
    options.batch_size = params.count("batch_size", options.batch_size);
    out = std::make_unique<problems::LinearNetProblem>(problems::make_rahimi_recht(options, rng));
  } else if (spec.name == "mlp") {
    problems::Dataset data;
    if (!spec.images.empty() || !spec.labels.empty()) {
      data = problems::load_idx(spec.images, spec.labels);
    } else {
      const std::size_t classes = params.count("classes", 10);
      const std::size_t per_class = params.count("per_class", 500);
      const std::size_t dim = params.count("dim", 32);
      const double separation = params.get("separation", 4.0);
      data = problems::make_blobs(classes, per_class, dim, separation, rng);
    }
    std::vector<std::size_t> layers = spec.layers;
    if (layers.empty()) layers = {data.dimension(), 128, 64, 32, data.classes};
    const std::size_t batch_size = params.count("batch_size", 100);
    out = std::make_unique<problems::MlpProblem>(problems::make_mlp(
        std::move(layers), problems::parse_activation(spec.activation), std::move(data),
        batch_size));
  } else {
    throw ConfigError("unknown problem '" + spec.name + "'");
  }
  params.finish();
  return out;
}

void ExperimentConfig::validate() const {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (check_every < 1) throw ConfigError("check_every must be at least 1");
  if (!(min_convergence_rate >= 0.0 && min_convergence_rate <= 1.0)) {
    throw ConfigError("min_convergence_rate must lie in [0, 1]");
  }
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw ConfigError("grid entry '" + key + "' is empty");
  }
  if (cost_iterations < 1) throw ConfigError("cost iterations must be at least 1");
  static const std::set<std::string> kProblems = {"rosenbrock", "quadratic", "rahimi_recht", "mlp"};
  if (!kProblems.count(problem.name)) throw ConfigError("unknown problem '" + problem.name + "'");
  problem.noise.validate();
  if (optimizer.name.empty() && cost_optimizers.empty()) {
    throw ConfigError("config needs an optimizer");
  }
  if (!optimizer.name.empty()) {
    // Fails fast on unknown names and parameters.
    auto probe = optimizer;
    for (const auto& [key, values] : grid) probe.params[key] = values.front();
    optim::make_optimizer(probe);
  } else if (!grid.empty()) {
    throw ConfigError("grid given without an optimizer");
  }
  for (const auto& spec : cost_optimizers) optim::make_optimizer(spec);
}

std::map<std::string, std::vector<double>> default_grid(const std::string& optimizer) {
  const std::vector<double> rates = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  if (optimizer == "sgd") return {{"lr", rates}, {"momentum", {0.9, 0.99}}};
  if (optimizer == "adam") return {{"lr", rates}};
  throw ConfigError("no default grid for optimizer '" + optimizer + "'");
}

namespace {

double number(const json& value, const std::string& key) {
  if (value.is_boolean()) return value.get<bool>() ? 1.0 : 0.0;
  if (!value.is_number()) throw ConfigError("'" + key + "' must be a number");
  return value.get<double>();
}

std::size_t count(const json& value, const std::string& key) {
  const double x = number(value, key);
  if (!(x >= 0.0) || x != std::floor(x)) {
    throw ConfigError("'" + key + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(x);
}

std::string text(const json& value, const std::string& key) {
  if (!value.is_string()) throw ConfigError("'" + key + "' must be a string");
  return value.get<std::string>();
}

std::map<std::string, double> numbers(const json& object, const std::string& key) {
  if (!object.is_object()) throw ConfigError("'" + key + "' must be an object");
  std::map<std::string, double> out;
  for (const auto& [name, value] : object.items()) out[name] = number(value, key + "." + name);
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() || base.empty() ? p : base / p;
}

ProblemSpec parse_problem(const json& node, const std::filesystem::path& base_dir) {
  ProblemSpec spec;
  if (node.is_string()) {
    spec.name = node.get<std::string>();
    return spec;
  }
  if (!node.is_object()) throw ConfigError("'problem' must be a string or an object");
  for (const auto& [key, value] : node.items()) {
    if (key == "name") {
      spec.name = text(value, key);
    } else if (key == "noise") {
      if (!value.is_array() || value.size() != 2) {
        throw ConfigError("'noise' must be a [lo, hi] pair");
      }
      spec.noise = {number(value[0], key), number(value[1], key)};
    } else if (key == "seed") {
      spec.seed = count(value, key);
    } else if (key == "layers") {
      if (!value.is_array()) throw ConfigError("'layers' must be an array");
      for (const auto& size : value) spec.layers.push_back(count(size, key));
    } else if (key == "activation") {
      spec.activation = text(value, key);
    } else if (key == "images") {
      spec.images = resolve(base_dir, text(value, key));
    } else if (key == "labels") {
      spec.labels = resolve(base_dir, text(value, key));
    } else {
      spec.params[key] = number(value, key);
    }
  }
  return spec;
}

optim::OptimizerSpec parse_optimizer(const json& node,
                                     std::map<std::string, std::vector<double>>& grid) {
  optim::OptimizerSpec spec;
  if (node.is_string()) {
    spec.name = node.get<std::string>();
    return spec;
  }
  if (!node.is_object()) throw ConfigError("optimizer must be a string or an object");
  if (!node.contains("name")) throw ConfigError("optimizer needs a name");
  spec.name = text(node["name"], "name");
  for (const auto& [key, value] : node.items()) {
    if (key == "name") {
      continue;
    } else if (key == "params") {
      spec.params = numbers(value, key);
    } else if (key == "grid") {
      if (value.is_string()) {
        if (value.get<std::string>() != "default") {
          throw ConfigError("'grid' must be \"default\" or an object of value lists");
        }
        grid = default_grid(spec.name);
      } else if (value.is_object()) {
        for (const auto& [name, values] : value.items()) {
          if (!values.is_array()) throw ConfigError("grid." + name + " must be an array");
          auto& out = grid[name];
          for (const auto& v : values) out.push_back(number(v, "grid." + name));
        }
      } else {
        throw ConfigError("'grid' must be \"default\" or an object of value lists");
      }
    } else {
      throw ConfigError("unknown optimizer key '" + key + "'");
    }
  }
  return spec;
}

}  // namespace

ExperimentConfig parse_config(std::string_view document, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& error) {
    throw ConfigError(std::string("invalid JSON: ") + error.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig config;
  for (const auto& [key, value] : root.items()) {
    if (key == "problem") {
      config.problem = parse_problem(value, base_dir);
    } else if (key == "optimizer") {
      config.optimizer = parse_optimizer(value, config.grid);
    } else if (key == "repeats") {
      config.repeats = count(value, key);
    } else if (key == "tolerance") {
      config.tolerance = number(value, key);
    } else if (key == "tolerance_mode") {
      const std::string mode = text(value, key);
      if (mode == "absolute") {
        config.tolerance_mode = ToleranceMode::kAbsolute;
      } else if (mode == "relative") {
        config.tolerance_mode = ToleranceMode::kRelative;
      } else {
        throw ConfigError("tolerance_mode must be \"absolute\" or \"relative\"");
      }
    } else if (key == "max_iterations") {
      config.max_iterations = count(value, key);
    } else if (key == "seed") {
      config.seed = count(value, key);
    } else if (key == "check_every") {
      config.check_every = count(value, key);
    } else if (key == "selection") {
      const std::string mode = text(value, key);
      if (mode == "iterations") {
        config.selection = Selection::kIterations;
      } else if (mode == "final_loss") {
        config.selection = Selection::kFinalLoss;
      } else {
        throw ConfigError("selection must be \"iterations\" or \"final_loss\"");
      }
    } else if (key == "min_convergence_rate") {
      config.min_convergence_rate = number(value, key);
    } else if (key == "output") {
      config.output_dir = resolve(base_dir, text(value, key));
    } else if (key == "traces") {
      if (!value.is_boolean()) throw ConfigError("'traces' must be a boolean");
      config.write_traces = value.get<bool>();
    } else if (key == "wall_time") {
      if (!value.is_boolean()) throw ConfigError("'wall_time' must be a boolean");
      config.record_wall_time = value.get<bool>();
    } else if (key == "cost") {
      if (!value.is_object()) throw ConfigError("'cost' must be an object");
      for (const auto& [name, item] : value.items()) {
        if (name == "optimizers") {
          if (!item.is_array()) throw ConfigError("cost.optimizers must be an array");
          std::map<std::string, std::vector<double>> unused;
          for (const auto& entry : item) {
            config.cost_optimizers.push_back(parse_optimizer(entry, unused));
          }
          if (!unused.empty()) throw ConfigError("cost optimizers cannot carry a grid");
        } else if (name == "warmup") {
          config.cost_warmup = count(item, "cost.warmup");
        } else if (name == "iterations") {
          config.cost_iterations = count(item, "cost.iterations");
        } else {
          throw ConfigError("unknown cost key '" + name + "'");
        }
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream document;
  document << in.rdbuf();
  return parse_config(document.str(), path.parent_path());
}

}  // namespace curveball::bench
