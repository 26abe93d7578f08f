#include "mixsurv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mixsurv/config.hpp"
#include "mixsurv/errors.hpp"
#include "mixsurv/estimators.hpp"
#include "mixsurv/experiment.hpp"
#include "mixsurv/kernel.hpp"
#include "mixsurv/limit.hpp"

namespace fs = std::filesystem;

namespace mixsurv {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::size_t jobs = 1;
  int verbosity = 0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Owns the output directory; every file goes through write().
class OutputDir {
 public:
  OutputDir(const std::string& dir, bool force) : dir_(dir), force_(force) {}

  // Refuses up front so long runs do not fail at the end.
  void check(const std::vector<std::string>& names) const {
    if (force_) return;
    for (const auto& name : names) {
      if (fs::exists(dir_ / name)) {
        throw UsageError("refusing to overwrite " + (dir_ / name).string() + " (use --force)");
      }
    }
  }

  void write(const std::string& name, const std::string& content) const {
    check({name});
    fs::create_directories(dir_);
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    os << content;
  }

  template <class F>
  void write_with(const std::string& name, F&& fill) const {
    std::ostringstream ss;
    fill(ss);
    write(name, ss.str());
  }

  const fs::path& path() const noexcept { return dir_; }

 private:
  fs::path dir_;
  bool force_;
};

RunConfig load(const CommonOptions& opt, bool need_model) {
  RunConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = load_config(opt.config_path);
  } else if (need_model) {
    throw UsageError("--config with a `model` section is required");
  }
  if (need_model && !cfg.has_model) throw ConfigError("config has no `model` section");
  if (opt.seed) cfg.experiment.seed = *opt.seed;
  return cfg;
}

// Step function evaluated at each distinct observed time.
void write_at_times(std::ostream& os, const StepFunction& fn, const std::vector<double>& times) {
  os << "t,value\n";
  for (double t : times) os << fmt(t) << ',' << fmt(fn(t)) << '\n';
}

int cmd_generate(const CommonOptions& opt, long long n) {
  if (n <= 0) throw UsageError("--n must be a positive sample size");
  const auto cfg = load(opt, true);
  OutputDir out(opt.out_dir, opt.force);
  out.check({"sample.csv"});
  const auto sample =
      generate_sample(cfg.experiment.model, static_cast<std::size_t>(n), RandomStream{cfg.experiment.seed, 0});
  out.write_with("sample.csv", [&](std::ostream& os) { write_sample_csv(os, sample); });
  std::printf("censoring proportion: %.4f\n", sample.censoring_proportion());
  return exit_ok;
}

int cmd_estimate(const CommonOptions& opt, const std::string& input) {
  std::ifstream in(input);
  if (!in) throw UsageError("cannot open input `" + input + "`");
  const auto sample = read_sample_csv(in);
  std::optional<RunConfig> cfg;
  if (!opt.config_path.empty()) cfg = load(opt, true);

  OutputDir out(opt.out_dir, opt.force);
  std::vector<std::string> files{"km.csv", "survival.csv", "nelson_aalen.csv", "quantile.csv"};
  if (cfg) {
    for (const char* stem : {"hazard_process", "pl_process", "quantile_process"}) {
      files.push_back(std::string(stem) + ".csv");
      files.push_back(std::string(stem) + ".json");
    }
  }
  out.check(files);

  const auto est = SampleEstimates::from(sample);
  const auto surv = km_survival(sample);
  std::vector<double> times = sample.z;
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  out.write_with("km.csv", [&](std::ostream& os) { write_at_times(os, est.fhat, times); });
  out.write_with("survival.csv", [&](std::ostream& os) { write_at_times(os, surv, times); });
  out.write_with("nelson_aalen.csv", [&](std::ostream& os) { write_at_times(os, est.lhat, times); });
  // Qn(p) = t_j for p in (Fhat(t_{j-1}), Fhat(t_j)].
  out.write_with("quantile.csv", [&](std::ostream& os) {
    os << "p,value\n";
    const auto& jt = est.fhat.jump_times();
    const auto& jv = est.fhat.values();
    for (std::size_t j = 0; j < jt.size(); ++j) os << fmt(jv[j]) << ',' << fmt(jt[j]) << '\n';
  });

  if (cfg) {
    const TrueModel truth(cfg->experiment.model);
    const auto range = admissible_range(truth, cfg->experiment.tau_epsilon);
    const auto grid = sup_grid(est.fhat, range.tau, cfg->experiment.grid_size);
    const auto p_grid = cfg->experiment.p_grid();
    const std::vector<std::pair<std::string, ProcessPath>> paths{
        {"hazard_process", hazard_process(est.lhat, truth, grid, est.n, range)},
        {"pl_process", pl_process(est.fhat, truth, grid, est.n, range)},
        {"quantile_process", quantile_process(est.fhat, truth, p_grid, est.n)},
    };
    for (const auto& [stem, path] : paths) {
      out.write_with(stem + ".csv", [&](std::ostream& os) { write_path_csv(os, path); });
      out.write(stem + ".json", path_sidecar_json(path, range));
    }
  }
  return exit_ok;
}

PathMethod parse_method(const std::string& s) {
  if (s == "kiefer") return PathMethod::kiefer;
  if (s == "integral") return PathMethod::integral;
  if (s == "direct") return PathMethod::direct;
  throw UsageError("unknown method `" + s + "` (kiefer, integral, direct)");
}

int cmd_gp_sample(const CommonOptions& opt, double level, std::size_t draws, const std::string& method_name) {
  const auto method = parse_method(method_name);
  if (level < 0.0) throw UsageError("--level must be >= 0");
  if (draws == 0) throw UsageError("--draws must be >= 1");
  const auto cfg = load(opt, true);
  OutputDir out(opt.out_dir, opt.force);
  out.check({"gp_draws.csv", "gp_covariance.json"});

  const auto& model = cfg.experiment.model;
  const TrueModel truth(model);
  const auto range = admissible_range(truth, cfg.gp.tau_epsilon);
  const auto full = uniform_grid(0.0, range.tau, cfg.gp.grid_size);
  std::vector<double> grid = full;
  if (method == PathMethod::direct) {
    grid.clear();
    for (std::size_t i = 0; i < full.size(); i += cfg.gp.direct_stride) grid.push_back(full[i]);
  }
  const GammaKernel kernel(model);
  const std::uint64_t seed = cfg.experiment.seed;

  std::vector<GaussianPath> paths(draws);
  std::optional<KieferSampler> kiefer;
  std::optional<DirectBSampler> direct;
  if (method == PathMethod::direct) {
    direct.emplace(grid, kernel, truth);
  } else {
    kiefer.emplace(grid, kernel);
  }
  parallel_for(draws, opt.jobs, [&](std::size_t i) {
    if (direct) {
      auto rng = RandomStream{seed, i}.engine(Substream::limit);
      paths[i] = direct->draw(level, rng);
    } else {
      auto rng = RandomStream{seed, i}.engine(Substream::kiefer);
      auto k = kiefer->draw(level, rng);
      paths[i] = method == PathMethod::integral ? sample_b_integral(k, level, truth) : std::move(k);
    }
  });

  out.write_with("gp_draws.csv", [&](std::ostream& os) {
    os << "draw,grid,value\n";
    for (std::size_t i = 0; i < draws; ++i) {
      for (std::size_t j = 0; j < grid.size(); ++j) os << i << ',' << fmt(grid[j]) << ',' << fmt(paths[i].values[j]) << '\n';
    }
  });

  // Four interior points and all pairs among them.
  std::vector<std::size_t> pos;
  for (std::size_t k = 1; k <= 4; ++k) {
    pos.push_back(static_cast<std::size_t>(std::lround(static_cast<double>(k * (grid.size() - 1)) / 4.0)));
  }
  nlohmann::ordered_json report;
  report["method"] = to_string(method);
  report["level"] = level;
  report["draws"] = draws;
  report["grid_size"] = grid.size();
  report["tau"] = range.tau;
  if (kiefer) {
    report["min_eigenvalue"] = kiefer->factor().min_eigenvalue;
    report["repair"] = kiefer->factor().repair;
  } else {
    report["min_eigenvalue"] = direct->factor().min_eigenvalue;
    report["repair"] = direct->factor().repair;
  }
  auto pairs = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < pos.size(); ++a) {
    for (std::size_t b = a; b < pos.size(); ++b) {
      const std::size_t i = pos[a], j = pos[b];
      const double s = grid[i], t = grid[j];
      double target = 0.0;
      if (level > 0.0) {
        target = method == PathMethod::kiefer ? level * kernel(s, t) : b_cov(s, level, t, level, kernel, truth);
      }
      double sum = 0.0, sum2 = 0.0;
      for (const auto& p : paths) {
        const double prod = p.values[i] * p.values[j];
        sum += prod;
        sum2 += prod * prod;
      }
      const double d = static_cast<double>(draws);
      const double mean = sum / d;
      const double var = draws > 1 ? std::max(0.0, (sum2 - d * mean * mean) / (d - 1.0)) : 0.0;
      const double se = std::sqrt(var / d);
      nlohmann::ordered_json row;
      row["s"] = s;
      row["t"] = t;
      row["target"] = target;
      row["empirical"] = mean;
      row["se"] = se;
      row["z"] = se > 0.0 ? nlohmann::ordered_json((mean - target) / se) : nlohmann::ordered_json();
      pairs.push_back(row);
    }
  }
  report["pairs"] = pairs;
  out.write("gp_covariance.json", report.dump(2) + "\n");
  return exit_ok;
}

std::string render_report(const std::vector<SummaryRow>& rows, std::map<std::string, RateFit>& fits) {
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.statistic) == order.end()) order.push_back(r.statistic);
  }
  std::ostringstream md;
  md << "# Experiment summary\n";
  bool any_invalid = false;
  for (const auto& name : order) {
    md << "\n## " << name << "\n\n" << describe_statistic(name) << "\n\n";
    md << "| n | median | mean | q05 | q95 | valid reps |\n|---|---|---|---|---|---|\n";
    std::vector<double> sizes, medians;
    for (const auto& r : rows) {
      if (r.statistic != name) continue;
      char line[256];
      std::snprintf(line, sizeof line, "| %zu | %.6g | %.6g | %.6g | %.6g | %zu%s |\n", r.n, r.median, r.mean, r.q05,
                    r.q95, r.reps_valid, r.valid ? "" : " (invalid)");
      md << line;
      any_invalid |= !r.valid;
      if (r.valid && r.median > 0.0) {
        sizes.push_back(static_cast<double>(r.n));
        medians.push_back(r.median);
      }
    }
    if (sizes.size() >= 3) {
      const auto fit = fit_rate(sizes, medians);
      fits[name] = fit;
      char line[160];
      std::snprintf(line, sizeof line, "\nlog-log slope %.4f (standard error %.4f)\n", fit.slope, fit.std_error);
      md << line;
    }
  }
  if (any_invalid) md << "\nSome rows have fewer than 90% valid replications and are flagged invalid.\n";
  return md.str();
}

// Writes report.md and plot_<stat>.csv; returns exit_flagged if any row is invalid.
int write_report(const OutputDir& out, const std::vector<SummaryRow>& rows) {
  std::map<std::string, RateFit> fits;
  out.write("report.md", render_report(rows, fits));
  for (const auto& [name, fit] : fits) {
    out.write_with("plot_" + name + ".csv", [&](std::ostream& os) {
      os << "log_n,log_median,fitted\n";
      for (const auto& r : rows) {
        if (r.statistic != name || !r.valid || !(r.median > 0.0)) continue;
        const double x = std::log(static_cast<double>(r.n));
        os << fmt(x) << ',' << fmt(std::log(r.median)) << ',' << fmt(fit.intercept + fit.slope * x) << '\n';
      }
    });
  }
  const bool ok = std::all_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.valid; });
  return ok ? exit_ok : exit_flagged;
}

int cmd_experiment(const CommonOptions& opt) {
  const auto cfg = load(opt, true);
  cfg.experiment.validate();
  OutputDir out(opt.out_dir, opt.force);
  out.check({"raw.csv", "summary.csv", "rates.json", "report.md"});
  const auto summary = run_experiment(cfg.experiment, opt.jobs);
  out.write_with("raw.csv", [&](std::ostream& os) { write_raw_csv(os, summary); });
  out.write_with("summary.csv", [&](std::ostream& os) { write_summary_csv(os, summary); });
  out.write("rates.json", rates_json(summary));
  const int code = write_report(out, summary.summary);
  if (code != exit_ok) spdlog::warn("some summary rows are invalid");
  return code;
}

int cmd_report(const CommonOptions& opt) {
  OutputDir out(opt.out_dir, opt.force);
  std::ifstream in(out.path() / "summary.csv");
  if (!in) throw UsageError("no summary.csv in " + out.path().string());
  const auto rows = read_summary_csv(in);
  out.check({"report.md"});
  return write_report(out, rows);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Estimators and Monte Carlo rate experiments for censored mixing data"};
  app.require_subcommand(1);
  CommonOptions opt;
  std::uint64_t seed = 0;
  app.add_option("--config", opt.config_path, "JSON configuration file");
  app.add_option("--out", opt.out_dir, "output directory (created if missing)");
  auto* seed_opt = app.add_option("--seed", seed, "override the configured master seed");
  app.add_flag("--force", opt.force, "overwrite existing output files");
  app.add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", opt.verbosity, "more logging (repeatable)");

  long long n = 0;
  auto* gen = app.add_subcommand("generate", "simulate a censored sample");
  gen->add_option("--n", n, "sample size")->required();
  gen->fallthrough();

  std::string input;
  auto* est = app.add_subcommand("estimate", "product-limit, Nelson-Aalen and quantile estimates of a sample");
  est->add_option("--input", input, "sample CSV `z,delta`")->required();
  est->fallthrough();

  double level = 1.0;
  std::size_t draws = 1;
  std::string method = "integral";
  auto* gp = app.add_subcommand("gp-sample", "draw paths of the Gaussian limit");
  gp->add_option("--level", level, "sample-size level n of B(., n)");
  gp->add_option("--draws", draws, "number of paths");
  gp->add_option("--method", method, "kiefer, integral or direct");
  gp->fallthrough();

  auto* exp = app.add_subcommand("experiment", "run the Monte Carlo rate experiment");
  exp->fallthrough();
  auto* rep = app.add_subcommand("report", "render report.md and plot data from summary.csv in --out");
  rep->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }
  if (*seed_opt) opt.seed = seed;
  spdlog::set_level(opt.verbosity >= 2 ? spdlog::level::debug
                    : opt.verbosity == 1 ? spdlog::level::info
                                         : spdlog::level::warn);

  try {
    if (*gen) return cmd_generate(opt, n);
    if (*est) return cmd_estimate(opt, input);
    if (*gp) return cmd_gp_sample(opt, level, draws, method);
    if (*exp) return cmd_experiment(opt);
    if (*rep) return cmd_report(opt);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_usage;
  } catch (const ConfigError& e) {
    // a bad config file is a usage problem, not a failed run
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_usage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_runtime;
  }
  return exit_usage;
}

}  // namespace mixsurv
