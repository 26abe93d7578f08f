#include "mixsurv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "mixsurv/normal.hpp"

namespace mixsurv {

double cov_g1gk(double s, double s2, std::size_t k, const MixingModel& model) {
  if (k == 0) throw std::invalid_argument("cov_g1gk: lag index k must be >= 1");
  const double hbar_s = model.lifetime.sf(s) * model.censoring.sf(s);
  const double hbar_s2 = model.lifetime.sf(s2) * model.censoring.sf(s2);
  if (k == 1) {
    const double h_min = 1.0 - model.lifetime.sf(std::min(s, s2)) * model.censoring.sf(std::min(s, s2));
    return h_min - (1.0 - hbar_s) * (1.0 - hbar_s2);
  }
  const double lag = static_cast<double>(k - 1);
  const double cx = std::pow(model.rho_x, lag);
  const double cy = std::pow(model.rho_y, lag);
  const double px = cx == 0.0 ? model.lifetime.sf(s) * model.lifetime.sf(s2)
                              : bvn_survival(norm_isf(model.lifetime.sf(s)), norm_isf(model.lifetime.sf(s2)), cx);
  const double py = cy == 0.0
                        ? model.censoring.sf(s) * model.censoring.sf(s2)
                        : bvn_survival(norm_isf(model.censoring.sf(s)), norm_isf(model.censoring.sf(s2)), cy);
  return px * py - hbar_s * hbar_s2;
}

namespace {

std::vector<double> default_calibration_grid(const MixingModel& model) {
  const TrueModel truth(model);
  std::vector<double> grid;
  constexpr int kPoints = 32;
  for (int i = 0; i < kPoints; ++i) grid.push_back(truth.H_quantile((i + 0.5) / kPoints));
  return grid;
}

}  // namespace

GammaKernel::GammaKernel(MixingModel model, double tail_target)
    : GammaKernel(model, default_calibration_grid(model), tail_target) {}

GammaKernel::GammaKernel(MixingModel model, std::span<const double> calibration_grid, double tail_target)
    : model_(std::move(model)) {
  model_.validate();
  if (!(tail_target > 0.0)) throw std::invalid_argument("tail target must be positive");
  decay_ = std::max(std::abs(model_.rho_x), std::abs(model_.rho_y));
  if (decay_ == 0.0) {
    k_max_ = 1;
    return;
  }
  double lag2 = 0.0;
  for (double s : calibration_grid) {
    for (double s2 : calibration_grid) {
      lag2 = std::max(lag2, std::abs(cov_g1gk(s, s2, 2, model_)));
    }
  }
  envelope_ = lag2 / decay_;
  k_max_ = 1;
  tail_bound_ = 2.0 * envelope_ * decay_ / (1.0 - decay_);
  while (tail_bound_ >= tail_target && k_max_ < 100000) {
    ++k_max_;
    tail_bound_ *= decay_;
  }
}

GammaKernel::Anchor GammaKernel::anchor(double s) const {
  Anchor p{};
  p.s = s;
  p.sx = model_.lifetime.sf(s);
  p.sy = model_.censoring.sf(s);
  p.ax = norm_isf(p.sx);
  p.ay = norm_isf(p.sy);
  p.hbar = p.sx * p.sy;
  return p;
}

double GammaKernel::lagged(const Anchor& u, const Anchor& v, double cx, double cy) const {
  const double px = cx == 0.0 ? u.sx * v.sx : bvn_survival(u.ax, v.ax, cx);
  const double py = cy == 0.0 ? u.sy * v.sy : bvn_survival(u.ay, v.ay, cy);
  return px * py - u.hbar * v.hbar;
}

double GammaKernel::series(const Anchor& u, const Anchor& v, std::size_t k_max) const {
  // u is the earlier time, so P(Z > u, Z > v) = P(Z > v).
  double total = v.hbar - u.hbar * v.hbar;
  double cx = 1.0;
  double cy = 1.0;
  for (std::size_t k = 2; k <= k_max; ++k) {
    cx *= model_.rho_x;
    cy *= model_.rho_y;
    total += lagged(u, v, cx, cy) + lagged(v, u, cx, cy);
  }
  return total;
}

double GammaKernel::truncated(double s, double s2, std::size_t k_max) const {
  if (k_max == 0) throw std::invalid_argument("truncation order must be >= 1");
  const double lo = std::min(s, s2);
  const double hi = std::max(s, s2);
  return series(anchor(lo), anchor(hi), k_max);
}

double GammaKernel::operator()(const Anchor& u, const Anchor& v) const {
  return u.s <= v.s ? series(u, v, k_max_) : series(v, u, k_max_);
}

GammaTable GammaKernel::tabulate(std::span<const double> grid) const {
  GammaTable table{{grid.begin(), grid.end()}, Eigen::MatrixXd(grid.size(), grid.size()), tail_bound_};
  std::vector<Anchor> points;
  points.reserve(grid.size());
  for (double s : grid) points.push_back(anchor(s));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i; j < grid.size(); ++j) {
      const bool ordered = grid[i] <= grid[j];
      const double v = series(ordered ? points[i] : points[j], ordered ? points[j] : points[i], k_max_);
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      table.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return table;
}

void write_matrix_csv(std::ostream& os, std::span<const double> grid, const Eigen::MatrixXd& matrix) {
  char buf[40];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", grid[i]);
    os << (i ? "," : "") << buf;
  }
  os << '\n';
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", matrix(r, c));
      os << (c ? "," : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace mixsurv
