#include "mixsurv/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mixsurv/errors.hpp"

namespace mixsurv {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key `" + (path.empty() ? key : path + "." + key) + "`");
  }
}

template <class T>
T get(const json& obj, const std::string& path, const std::string& key) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": missing or wrong type");
  }
}

template <class T>
void get_opt(const json& obj, const std::string& path, const std::string& key, T& out) {
  if (obj.contains(key)) out = get<T>(obj, path, key);
}

Marginal parse_marginal(const json& obj, const std::string& path) {
  check_keys(obj, path, {"family", "rate", "shape", "scale", "upper"});
  const auto family = get<std::string>(obj, path, "family");
  if (family == "exponential") {
    check_keys(obj, path, {"family", "rate"});
    return Marginal::exponential(get<double>(obj, path, "rate"));
  }
  if (family == "weibull") {
    check_keys(obj, path, {"family", "shape", "scale"});
    return Marginal::weibull(get<double>(obj, path, "shape"), get<double>(obj, path, "scale"));
  }
  if (family == "uniform") {
    check_keys(obj, path, {"family", "upper"});
    return Marginal::uniform(get<double>(obj, path, "upper"));
  }
  throw ConfigError(path + ".family: unknown family `" + family + "` (exponential, weibull, uniform)");
}

MixingModel parse_model(const json& obj) {
  check_keys(obj, "model", {"lifetime", "censoring", "rho_x", "rho_y"});
  MixingModel m;
  try {
    m.lifetime = parse_marginal(obj.at("lifetime"), "model.lifetime");
    m.censoring = parse_marginal(obj.at("censoring"), "model.censoring");
  } catch (const json::exception&) {
    throw ConfigError("model: `lifetime` and `censoring` are required");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  get_opt(obj, "model", "rho_x", m.rho_x);
  get_opt(obj, "model", "rho_y", m.rho_y);
  try {
    m.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return m;
}

void parse_experiment(const json& obj, ExperimentConfig& cfg) {
  const std::string p = "experiment";
  check_keys(obj, p, {"sizes", "reps", "seed", "tau_epsilon", "p0", "p1", "grid_size", "limit_grid_size",
                      "statistics", "lambda", "window_constant"});
  get_opt(obj, p, "sizes", cfg.sizes);
  get_opt(obj, p, "reps", cfg.reps);
  get_opt(obj, p, "seed", cfg.seed);
  get_opt(obj, p, "tau_epsilon", cfg.tau_epsilon);
  get_opt(obj, p, "p0", cfg.p0);
  get_opt(obj, p, "p1", cfg.p1);
  get_opt(obj, p, "grid_size", cfg.grid_size);
  get_opt(obj, p, "limit_grid_size", cfg.limit_grid_size);
  get_opt(obj, p, "lambda", cfg.rates.lambda_exp);
  get_opt(obj, p, "window_constant", cfg.rates.window_constant);
  if (obj.contains("statistics")) {
    cfg.statistics.clear();
    for (const auto& name : get<std::vector<std::string>>(obj, p, "statistics")) {
      cfg.statistics.push_back(parse_statistic(name));
    }
  }
}

void parse_gp(const json& obj, GpConfig& gp) {
  check_keys(obj, "gp", {"grid_size", "direct_stride", "tau_epsilon"});
  get_opt(obj, "gp", "grid_size", gp.grid_size);
  get_opt(obj, "gp", "direct_stride", gp.direct_stride);
  get_opt(obj, "gp", "tau_epsilon", gp.tau_epsilon);
  if (gp.grid_size < 2) throw ConfigError("gp.grid_size must be >= 2");
  if (gp.direct_stride == 0) throw ConfigError("gp.direct_stride must be >= 1");
}

// 1-based line and column of a byte offset.
std::string locate(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::size_t start = text.rfind('\n', offset > 0 ? offset - 1 : 0);
  start = start == std::string::npos ? 0 : start + 1;
  std::size_t end = text.find('\n', start);
  std::string context = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
  return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": `" + context + "`";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at " + locate(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  check_keys(root, "", {"model", "experiment", "gp"});
  RunConfig cfg;
  if (root.contains("model")) {
    cfg.experiment.model = parse_model(root["model"]);
    cfg.has_model = true;
  }
  if (root.contains("experiment")) parse_experiment(root["experiment"], cfg.experiment);
  if (root.contains("gp")) parse_gp(root["gp"], cfg.gp);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file `" + path + "`");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace mixsurv
