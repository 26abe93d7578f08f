#include "mixsurv/stats.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "mixsurv/errors.hpp"

namespace mixsurv {

namespace {

double log_log(std::size_t n) {
  if (n < 10) throw std::invalid_argument("statistic requires n >= 10 so that log log n > 0");
  return std::log(std::log(static_cast<double>(n)));
}

}  // namespace

double RateParams::a_n(double n) { return std::sqrt(std::log(std::log(n)) / n); }

double RateParams::b_n(double n, double lambda) { return std::pow(std::log(n), -lambda) / std::sqrt(n); }

double sup_norm(const ProcessPath& path) {
  if (path.values.empty()) throw std::invalid_argument("sup_norm of an empty path");
  double best = 0.0;
  for (double v : path.values) best = std::max(best, std::abs(v));
  for (double v : path.left_values) best = std::max(best, std::abs(v));
  return best;
}

double sup_norm(const ProcessPath& path, const std::function<double(double)>& weight) {
  if (path.values.empty()) throw std::invalid_argument("sup_norm of an empty path");
  double best = 0.0;
  for (std::size_t i = 0; i < path.grid.size(); ++i) {
    const double w = std::abs(weight(path.grid[i]));
    best = std::max(best, w * std::abs(path.values[i]));
    if (i < path.left_values.size()) best = std::max(best, w * std::abs(path.left_values[i]));
  }
  return best;
}

double sup_deviation(const SampleEstimates& est, const TrueModel& truth, Which which, const AdmissibleRange& range,
                     std::size_t grid_points) {
  const StepFunction& fn = which == Which::pl ? est.fhat : est.lhat;
  double best = 0.0;
  for (double t : sup_grid(fn, range.tau, grid_points)) {
    const double target = which == Which::pl ? truth.F(t) : truth.Lambda(t);
    best = std::max({best, std::abs(fn(t) - target), std::abs(fn.left_limit(t) - target)});
  }
  return best;
}

double lil_stat(const SampleEstimates& est, const TrueModel& truth, Which which, const AdmissibleRange& range,
                std::size_t grid_points) {
  const double ll = log_log(est.n);
  return sup_deviation(est, truth, which, range, grid_points) * std::sqrt(static_cast<double>(est.n) / ll);
}

double bahadur_stat(const StepFunction& fhat, std::span<const double> p_grid) {
  double best = 0.0;
  for (double p : p_grid) best = std::max(best, std::abs(fhat(pl_quantile(fhat, p)) - p));
  return best;
}

double max_jump(const StepFunction& fhat, double t_lo, double t_hi) {
  double best = 0.0;
  const auto times = fhat.jump_times();
  const auto vals = fhat.values();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo) continue;
    if (times[i] > t_hi) break;
    const double before = i == 0 ? fhat.initial_value() : vals[i - 1];
    best = std::max(best, vals[i] - before);
  }
  return best;
}

double qdev_stat(const StepFunction& fhat, std::size_t n, const TrueModel& truth, std::span<const double> p_grid) {
  const double ll = log_log(n);
  double best = 0.0;
  for (double p : p_grid) best = std::max(best, std::abs(pl_quantile(fhat, p) - truth.Q(p)));
  return std::sqrt(static_cast<double>(n)) * best / std::sqrt(ll);
}

double window_oscillation(std::span<const double> t, std::span<const double> v, double width) {
  if (t.size() != v.size()) throw std::invalid_argument("window_oscillation: length mismatch");
  if (!(width > 0.0) || t.empty()) return 0.0;
  std::deque<std::size_t> hi;
  std::deque<std::size_t> lo;
  double best = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    while (j < t.size() && t[j] - t[i] <= width) {
      while (!hi.empty() && v[hi.back()] <= v[j]) hi.pop_back();
      while (!lo.empty() && v[lo.back()] >= v[j]) lo.pop_back();
      hi.push_back(j);
      lo.push_back(j);
      ++j;
    }
    best = std::max(best, v[hi.front()] - v[lo.front()]);
    if (hi.front() == i) hi.pop_front();
    if (lo.front() == i) lo.pop_front();
  }
  return best;
}

double window_oscillation_brute(std::span<const double> t, std::span<const double> v, double width) {
  if (!(width > 0.0)) return 0.0;
  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (std::abs(t[i] - t[j]) <= width) best = std::max(best, std::abs(v[i] - v[j]));
    }
  }
  return best;
}

double oscillation_stat(const SampleEstimates& est, const TrueModel& truth, double width,
                        const AdmissibleRange& range, std::size_t grid_points) {
  if (!(width > 0.0)) return 0.0;
  const auto grid = sup_grid(est.fhat, range.tau, grid_points);
  const auto path = pl_process(est.fhat, truth, grid, est.n, range);
  // Left limits sit at the jump time itself; any positive window reaches them.
  std::vector<double> t;
  std::vector<double> v;
  t.reserve(2 * grid.size());
  v.reserve(2 * grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    t.push_back(grid[i]);
    v.push_back(path.left_values[i]);
    t.push_back(grid[i]);
    v.push_back(path.values[i]);
  }
  return window_oscillation(t, v, width);
}

double coupling_stat(const StepFunction& fhat, std::size_t n, const TrueModel& truth, std::span<const double> p_grid) {
  const auto rho = quantile_process(fhat, truth, p_grid, n);
  const double scale = std::sqrt(static_cast<double>(n));
  double best = 0.0;
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const double q = truth.Q(p_grid[i]);
    const double z = scale * (fhat(q) - truth.F(q));
    best = std::max(best, std::abs(rho.values[i] - z));
  }
  return best;
}

double sup_quantile_process(const StepFunction& fhat, std::size_t n, const TrueModel& truth,
                            std::span<const double> p_grid) {
  return sup_norm(quantile_process(fhat, truth, p_grid, n));
}

double second_order_remainder(const SampleEstimates& est, const TrueModel& truth, const AdmissibleRange& range,
                       std::size_t grid_points) {
  double best = 0.0;
  auto gap = [&](double fh, double lh, double t) {
    const double ft = truth.F(t);
    return std::abs((fh - ft) - (1.0 - ft) * (lh - truth.Lambda(t)));
  };
  for (double t : sup_grid(est.fhat, range.tau, grid_points)) {
    best = std::max({best, gap(est.fhat(t), est.lhat(t), t),
                     gap(est.fhat.left_limit(t), est.lhat.left_limit(t), t)});
  }
  return best;
}

double remainder_stat(const SampleEstimates& est, const TrueModel& truth, const AdmissibleRange& range,
                  std::size_t grid_points) {
  const double ll = log_log(est.n);
  return second_order_remainder(est, truth, range, grid_points) * static_cast<double>(est.n) / ll;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance requires two nonempty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) x = sa[i]; else x = sb[j];
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

RateFit fit_rate(std::span<const double> sizes, std::span<const double> medians) {
  if (sizes.size() != medians.size()) throw std::invalid_argument("fit_rate: sizes and medians differ in length");
  if (sizes.size() < 3) throw std::invalid_argument("fit_rate requires at least 3 sizes");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(medians[i] > 0.0) || !std::isfinite(medians[i]) || !(sizes[i] > 0.0)) {
      spdlog::warn("fit_rate: dropping n={} with non-positive median {}", sizes[i], medians[i]);
      continue;
    }
    lx.push_back(std::log(sizes[i]));
    ly.push_back(std::log(medians[i]));
  }
  if (lx.size() < 2) throw std::invalid_argument("fit_rate: fewer than 2 usable points");
  const double k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: sizes must not all be equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = lx.size();
  if (lx.size() > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
      sse += r * r;
    }
    fit.std_error = std::sqrt(sse / (k - 2.0) / sxx);
  } else {
    fit.std_error = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace mixsurv
