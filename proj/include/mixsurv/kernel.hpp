#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mixsurv/datagen.hpp"

namespace mixsurv {

/// Cov(g_1(s), g_k(s2)) with g_k(s) = I(Z_k <= s) - H(s), under the Gaussian
/// copula AR(1) model. The lag-(k-1) joint survival of Z factors into the
/// lifetime and censoring chains, each a bivariate normal orthant probability
/// at thresholds Phi^{-1}(F(s)), Phi^{-1}(F(s2)) and correlation rho^{k-1}.
/// k = 1 is the Bernoulli covariance H(s ^ s2) - H(s) H(s2).
double cov_g1gk(double s, double s2, std::size_t k, const MixingModel& model);

// Gamma values on a grid, row-major over grid x grid.
struct GammaTable {
  std::vector<double> grid;
  Eigen::MatrixXd values;
  double tail_bound = 0.0;
};

/// Long-run covariance kernel
///   Gamma(s, s2) = Cov(g_1(s), g_1(s2)) + sum_{k>=2} [Cov(g_1(s), g_k(s2)) + Cov(g_1(s2), g_k(s))]
/// truncated at k_max. The truncation uses the geometric envelope
/// |Cov(g_1, g_k)| <= C r^{k-1}, r = max(|rho_x|, |rho_y|), with C fitted at
/// lag 2 over a calibration grid; k_max is the first order whose two-sided
/// tail 2 C r^{k_max} / (1 - r) drops below the target.
class GammaKernel {
 public:
  explicit GammaKernel(MixingModel model, double tail_target = 1e-8);
  GammaKernel(MixingModel model, std::span<const double> calibration_grid, double tail_target = 1e-8);

  // Per-time quantities reused across many kernel evaluations.
  struct Anchor {
    double s;
    double ax;    // Gaussian-scale lifetime threshold
    double ay;    // Gaussian-scale censoring threshold
    double sx;    // P(X > s)
    double sy;    // P(Y > s)
    double hbar;  // P(Z > s)
  };
  Anchor anchor(double s) const;

  double operator()(double s, double s2) const { return truncated(s, s2, k_max_); }
  double operator()(const Anchor& u, const Anchor& v) const;
  // Same series stopped at an explicit order (>= 1).
  double truncated(double s, double s2, std::size_t k_max) const;

  GammaTable tabulate(std::span<const double> grid) const;

  const MixingModel& model() const noexcept { return model_; }
  std::size_t k_max() const noexcept { return k_max_; }
  double tail_bound() const noexcept { return tail_bound_; }
  double envelope_constant() const noexcept { return envelope_; }
  double decay() const noexcept { return decay_; }

 private:
  double lagged(const Anchor& u, const Anchor& v, double cx, double cy) const;
  double series(const Anchor& u, const Anchor& v, std::size_t k_max) const;

  MixingModel model_;
  std::size_t k_max_ = 1;
  double tail_bound_ = 0.0;
  double envelope_ = 0.0;
  double decay_ = 0.0;
};

// Row-major CSV whose header row lists the grid points.
void write_matrix_csv(std::ostream& os, std::span<const double> grid, const Eigen::MatrixXd& matrix);

}  // namespace mixsurv
