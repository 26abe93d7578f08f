#include "mixsurv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "mixsurv/errors.hpp"

namespace mixsurv {

namespace {

struct TimeGroup {
  double t;
  std::size_t events;
  std::size_t censored;
  std::size_t at_risk;  // #{z >= t}
};

std::vector<TimeGroup> group_times(const CensoredSample& sample) {
  const std::size_t n = sample.size();
  if (n == 0) throw std::invalid_argument("estimator requires a nonempty sample");
  if (sample.delta.size() != n) throw std::invalid_argument("z and delta differ in length");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sample.z[a] < sample.z[b]; });

  std::vector<TimeGroup> groups;
  std::size_t seen = 0;
  for (std::size_t k = 0; k < n;) {
    const double t = sample.z[order[k]];
    TimeGroup g{t, 0, 0, n - seen};
    while (k < n && sample.z[order[k]] == t) {
      if (sample.delta[order[k]] != 0) ++g.events; else ++g.censored;
      ++k;
    }
    seen += g.events + g.censored;
    groups.push_back(g);
  }
  return groups;
}

void check_in_range(std::span<const double> grid, const AdmissibleRange& range) {
  for (double t : grid) {
    if (t < 0.0 || t > range.tau) {
      throw RangeError("grid point " + std::to_string(t) + " outside admissible range [0, " +
                       std::to_string(range.tau) + "]");
    }
  }
}

void check_increasing(std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("process grid must be strictly increasing");
  }
}

}  // namespace

Counting counting(const CensoredSample& sample) {
  const auto groups = group_times(sample);
  const double n = static_cast<double>(sample.size());
  std::vector<double> risk_t, risk_v, event_t, event_v;
  std::size_t cumulative_events = 0;
  for (const auto& g : groups) {
    risk_t.push_back(g.t);
    risk_v.push_back(static_cast<double>(g.at_risk - g.events - g.censored) / n);
    if (g.events > 0) {
      cumulative_events += g.events;
      event_t.push_back(g.t);
      event_v.push_back(static_cast<double>(cumulative_events) / n);
    }
  }
  return Counting{StepFunction(std::move(risk_t), std::move(risk_v), 1.0, Continuity::left),
                  StepFunction(std::move(event_t), std::move(event_v), 0.0, Continuity::right)};
}

StepFunction km_survival(const CensoredSample& sample) {
  const auto groups = group_times(sample);
  std::vector<double> times, values;
  double surv = 1.0;
  for (const auto& g : groups) {
    if (g.events == 0) continue;
    surv *= static_cast<double>(g.at_risk - g.events) / static_cast<double>(g.at_risk);
    times.push_back(g.t);
    values.push_back(surv);
  }
  return StepFunction(std::move(times), std::move(values), 1.0);
}

StepFunction km(const CensoredSample& sample) {
  const auto surv = km_survival(sample);
  std::vector<double> times(surv.jump_times().begin(), surv.jump_times().end());
  std::vector<double> values(surv.size());
  std::transform(surv.values().begin(), surv.values().end(), values.begin(), [](double s) { return 1.0 - s; });
  return StepFunction(std::move(times), std::move(values), 0.0);
}

StepFunction nelson_aalen(const CensoredSample& sample) {
  const auto groups = group_times(sample);
  std::vector<double> times, values;
  double cumulative = 0.0;
  for (const auto& g : groups) {
    if (g.events == 0) continue;
    cumulative += static_cast<double>(g.events) / static_cast<double>(g.at_risk);
    times.push_back(g.t);
    values.push_back(cumulative);
  }
  return StepFunction(std::move(times), std::move(values), 0.0);
}

double pl_quantile(const StepFunction& fhat, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile level must lie in (0, 1)");
  const auto vals = fhat.values();
  const auto it = std::lower_bound(vals.begin(), vals.end(), p);
  if (it == vals.end()) throw QuantileNotAttained(p, fhat.final_value());
  return fhat.jump_times()[static_cast<std::size_t>(it - vals.begin())];
}

AdmissibleRange admissible_range(const TrueModel& truth, double epsilon) {
  return AdmissibleRange{truth.tau(epsilon), epsilon};
}

std::string to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::hazard: return "hazard";
    case ProcessKind::pl: return "pl";
    case ProcessKind::quantile: return "quantile";
  }
  return "unknown";
}

ProcessPath hazard_process(const StepFunction& lhat, const TrueModel& truth, std::span<const double> grid,
                           std::size_t n, const AdmissibleRange& range) {
  check_increasing(grid);
  check_in_range(grid, range);
  const double scale = std::sqrt(static_cast<double>(n));
  ProcessPath path{{grid.begin(), grid.end()}, {}, {}, n, ProcessKind::hazard};
  path.values.reserve(grid.size());
  path.left_values.reserve(grid.size());
  for (double t : grid) {
    const double lam = truth.Lambda(t);
    path.values.push_back(scale * (lhat(t) - lam));
    path.left_values.push_back(scale * (lhat.left_limit(t) - lam));
  }
  return path;
}

ProcessPath pl_process(const StepFunction& fhat, const TrueModel& truth, std::span<const double> grid,
                       std::size_t n, const AdmissibleRange& range) {
  check_increasing(grid);
  check_in_range(grid, range);
  const double scale = std::sqrt(static_cast<double>(n));
  ProcessPath path{{grid.begin(), grid.end()}, {}, {}, n, ProcessKind::pl};
  path.values.reserve(grid.size());
  path.left_values.reserve(grid.size());
  for (double t : grid) {
    const double ft = truth.F(t);
    path.values.push_back(scale * (fhat(t) - ft));
    path.left_values.push_back(scale * (fhat.left_limit(t) - ft));
  }
  return path;
}

ProcessPath quantile_process(const StepFunction& fhat, const TrueModel& truth, std::span<const double> p_grid,
                             std::size_t n) {
  check_increasing(p_grid);
  const double scale = std::sqrt(static_cast<double>(n));
  ProcessPath path{{p_grid.begin(), p_grid.end()}, {}, {}, n, ProcessKind::quantile};
  path.values.reserve(p_grid.size());
  for (double p : p_grid) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile grid must lie in (0, 1)");
    const double q = truth.Q(p);
    const double dens = truth.f(q);
    if (!(dens > 0.0)) {
      throw std::domain_error("lifetime density vanishes at Q(" + std::to_string(p) + ")");
    }
    path.values.push_back(scale * dens * (q - pl_quantile(fhat, p)));
  }
  path.left_values = path.values;
  return path;
}

ProcessPath quantile_process(const CensoredSample& sample, const TrueModel& truth,
                             std::span<const double> p_grid) {
  return quantile_process(km(sample), truth, p_grid, sample.size());
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  if (points == 0) return {};
  if (points == 1) return {lo};
  std::vector<double> grid(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid.back() = hi;
  return grid;
}

std::vector<double> sup_grid(const StepFunction& fn, double tau, std::size_t uniform_points) {
  std::vector<double> grid = uniform_grid(0.0, tau, uniform_points);
  for (double t : fn.jump_times()) {
    if (t > tau) break;
    if (t >= 0.0) grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SampleEstimates SampleEstimates::from(const CensoredSample& sample) {
  return SampleEstimates{sample.size(), km(sample), nelson_aalen(sample)};
}

void write_path_csv(std::ostream& os, const ProcessPath& path) {
  os << "grid,value\n";
  char buf[80];
  for (std::size_t i = 0; i < path.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", path.grid[i], path.values[i]);
    os << buf;
  }
}

std::string path_sidecar_json(const ProcessPath& path, const AdmissibleRange& range) {
  nlohmann::ordered_json j;
  j["n"] = path.n;
  j["kind"] = to_string(path.kind);
  j["tau"] = range.tau;
  j["epsilon"] = range.epsilon;
  return j.dump(2) + "\n";
}

}  // namespace mixsurv
