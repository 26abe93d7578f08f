#pragma once

#include <cstddef>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixsurv/datagen.hpp"
#include "mixsurv/kernel.hpp"
#include "mixsurv/random.hpp"

namespace mixsurv {

/// Cov[B(s, m), B(t, n)] for the Gaussian process
///   B(t, n) = int_0^t K(x, n) / sqrt(n) / Hbar(x)^2 dF*(x),
/// i.e. min(m, n)/sqrt(mn) * int_0^t int_0^s Gamma(x, y) w(x) w(y) dx dy with
/// w = (1 - G) f / Hbar^2. Nested adaptive Gauss-Kronrod, split along the
/// diagonal where Gamma has a kink. Throws QuadratureError when the error
/// estimate misses rel_tol by more than an order of magnitude.
double b_cov(double s, double m, double t, double n, const GammaKernel& kernel, const TrueModel& truth,
             double rel_tol = 1e-6);

// Covariance of B(., n) on a grid at a common level, from cell integrals
// accumulated in both directions.
Eigen::MatrixXd b_cov_matrix(std::span<const double> grid, const GammaKernel& kernel, const TrueModel& truth,
                             double rel_tol = 1e-6);

/// Symmetric square root of a covariance matrix after clipping negative
/// eigenvalues to zero and adding a 1e-10 ridge. `repair` is the largest
/// eigenvalue perturbation, max(0, -min_eigenvalue) + ridge.
struct PsdFactor {
  Eigen::MatrixXd root;
  double min_eigenvalue = 0.0;
  double repair = 0.0;
};

PsdFactor psd_factor(const Eigen::MatrixXd& covariance, double ridge = 1e-10);

enum class PathMethod { kiefer, integral, direct };
std::string to_string(PathMethod method);

struct GaussianPath {
  std::vector<double> grid;
  std::vector<double> values;
  double level = 0.0;
  PathMethod method = PathMethod::kiefer;
};

/// Draws K(., level) on a fixed grid: mean zero, covariance Gamma(s_i, s_j) * level.
class KieferSampler {
 public:
  static constexpr std::size_t kMaxGrid = 2048;

  KieferSampler(std::span<const double> grid, const GammaKernel& kernel);

  GaussianPath draw(double level, std::mt19937_64& rng) const;
  // K(., levels[0]), K(., levels[1]), ... from independent increments; levels nondecreasing.
  std::vector<GaussianPath> draw_nested(std::span<const double> levels, std::mt19937_64& rng) const;

  const std::vector<double>& grid() const noexcept { return grid_; }
  const GammaTable& gamma() const noexcept { return gamma_; }
  const PsdFactor& factor() const noexcept { return factor_; }

 private:
  std::vector<double> grid_;
  GammaTable gamma_;
  PsdFactor factor_;
};

GaussianPath sample_kiefer(std::span<const double> grid, double level, const GammaKernel& kernel,
                           const RandomStream& stream);

// Trapezoidal accumulation of K(x, n) / (sqrt(n) Hbar(x)^2) against dF*.
// Level 0 yields the zero path.
GaussianPath sample_b_integral(const GaussianPath& kpath, double n, const TrueModel& truth);

/// Draws B(., n) directly from the b_cov matrix on the grid.
class DirectBSampler {
 public:
  static constexpr std::size_t kMaxGrid = 1024;

  DirectBSampler(std::span<const double> grid, const GammaKernel& kernel, const TrueModel& truth);

  GaussianPath draw(double level, std::mt19937_64& rng) const;

  const std::vector<double>& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  const PsdFactor& factor() const noexcept { return factor_; }

 private:
  std::vector<double> grid_;
  Eigen::MatrixXd covariance_;
  PsdFactor factor_;
};

GaussianPath sample_b_direct(std::span<const double> grid, double n, const GammaKernel& kernel,
                             const TrueModel& truth, const RandomStream& stream);

// CSV `grid,value`.
void write_gaussian_path_csv(std::ostream& os, const GaussianPath& path);

}  // namespace mixsurv
