#include "mixsurv/limit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <spdlog/spdlog.h>

#include "mixsurv/errors.hpp"

namespace mixsurv {

namespace {


double b_weight(const TrueModel& truth, double x) {
  const double hbar = truth.Hbar(x);
  return truth.fstar_density(x) / (hbar * hbar);
}

void require_positive_hbar(const TrueModel& truth, double t) {
  if (!(truth.Hbar(t) > 0.0)) {
    throw RangeError("B is undefined where Hbar vanishes (t=" + std::to_string(t) + ")");
  }
}

// Integrals of Gamma(x, y) w(x) w(y) over products of panels. x and y share
// the same breakpoints, so the kink of Gamma along x = y only ever lies on
// the diagonal of a square cell; those cells are split into two triangles
// (Gamma is symmetric) and each triangle is mapped onto the unit square.
// Every cell is integrated by a 10-point and a 5-point Gauss-Legendre rule;
// the difference serves as the error estimate.
class PanelIntegrator {
 public:
  PanelIntegrator(const GammaKernel& kernel, const TrueModel& truth, std::vector<double> breaks)
      : kernel_(kernel), truth_(truth), breaks_(std::move(breaks)) {
    for (std::size_t p = 0; p + 1 < breaks_.size(); ++p) {
      fine_.push_back(nodes<High>(breaks_[p], breaks_[p + 1]));
      coarse_.push_back(nodes<Low>(breaks_[p], breaks_[p + 1]));
    }
  }

  std::size_t panels() const noexcept { return fine_.size(); }
  const std::vector<double>& breaks() const noexcept { return breaks_; }

  // Integral over panel p x panel q; adds |fine - coarse| to the error.
  double cell(std::size_t p, std::size_t q) {
    double fine, coarse;
    if (p == q) {
      fine = triangle<High>(p);
      coarse = triangle<Low>(p);
    } else {
      fine = rectangle(fine_[p], fine_[q]);
      coarse = rectangle(coarse_[p], coarse_[q]);
    }
    error_ += std::abs(fine - coarse);
    return fine;
  }

  double error() const noexcept { return error_; }

 private:
  using High = boost::math::quadrature::gauss<double, 10>;
  using Low = boost::math::quadrature::gauss<double, 5>;

  struct Node {
    GammaKernel::Anchor anchor;
    double weight;  // quadrature weight times w(x)
  };

  // Full node list of rule G on [a, b], as fractions of the panel with weights summing to 1.
  template <class G>
  static std::vector<std::pair<double, double>> unit_rule() {
    std::vector<std::pair<double, double>> out;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) {
        out.emplace_back(0.5, 0.5 * w[i]);
      } else {
        out.emplace_back(0.5 * (1.0 - x[i]), 0.5 * w[i]);
        out.emplace_back(0.5 * (1.0 + x[i]), 0.5 * w[i]);
      }
    }
    return out;
  }

  template <class G>
  std::vector<Node> nodes(double a, double b) const {
    std::vector<Node> out;
    for (const auto& [u, w] : unit_rule<G>()) {
      const double x = a + (b - a) * u;
      out.push_back({kernel_.anchor(x), (b - a) * w * b_weight(truth_, x)});
    }
    return out;
  }

  double rectangle(const std::vector<Node>& xs, const std::vector<Node>& ys) const {
    double total = 0.0;
    for (const auto& x : xs) {
      double row = 0.0;
      for (const auto& y : ys) row += y.weight * kernel_(x.anchor, y.anchor);
      total += x.weight * row;
    }
    return total;
  }

  // 2 * int_a^b int_a^x Gamma(x, y) w(x) w(y) dy dx with y = a + (x - a) v.
  template <class G>
  double triangle(std::size_t p) const {
    const double a = breaks_[p];
    const double len = breaks_[p + 1] - a;
    const auto rule = unit_rule<G>();
    double total = 0.0;
    for (const auto& [u, wu] : rule) {
      const double x = a + len * u;
      const auto ax = kernel_.anchor(x);
      const double inner_len = x - a;
      double row = 0.0;
      for (const auto& [v, wv] : rule) {
        const double y = a + inner_len * v;
        row += wv * b_weight(truth_, y) * kernel_(ax, kernel_.anchor(y));
      }
      total += wu * b_weight(truth_, x) * inner_len * row;
    }
    return 2.0 * len * total;
  }

  const GammaKernel& kernel_;
  const TrueModel& truth_;
  std::vector<double> breaks_;
  std::vector<std::vector<Node>> fine_;
  std::vector<std::vector<Node>> coarse_;
  double error_ = 0.0;
};

constexpr std::size_t kGradedPanels = 8;

// Sorted union of `required` points and an equispaced partition of [0, hi]
// into `panels` pieces; points closer than a tiny gap are merged.
std::vector<double> breakpoints(std::vector<double> required, double hi, std::size_t panels) {
  for (std::size_t k = 0; k <= panels; ++k) required.push_back(hi * static_cast<double>(k) / static_cast<double>(panels));
  // Gaussian-scale thresholds diverge at 0, so Gamma is not smooth there; grade geometrically.
  double h = hi / static_cast<double>(panels);
  for (std::size_t j = 0; j < kGradedPanels; ++j) required.push_back(h *= 0.25);
  std::sort(required.begin(), required.end());
  std::vector<double> out;
  for (double b : required) {
    if (out.empty() || b - out.back() > 1e-12 * std::max(1.0, hi)) {
      out.push_back(b);
    } else {
      out.back() = std::max(out.back(), b);
    }
  }
  return out;
}

constexpr std::size_t kMinPanels = 8;
constexpr std::size_t kMaxPanels = 256;

void check_quadrature(double value, double error, double rel_tol, const char* what) {
  if (!std::isfinite(value) || error > 10.0 * rel_tol * std::abs(value) + 1e-12) {
    throw QuadratureError(std::string(what) + ": error estimate " + std::to_string(error) +
                          " exceeds tolerance for value " + std::to_string(value));
  }
}

}  // namespace

namespace {

// Cumulative integrals over [0, b_i] x [0, b_j] for all breakpoints, refining
// the uniform part of the partition until the error estimate meets rel_tol.
Eigen::MatrixXd cumulative_integrals(const std::vector<double>& required, const GammaKernel& kernel,
                                     const TrueModel& truth, double rel_tol, std::vector<double>& breaks_out) {
  const double hi = *std::max_element(required.begin(), required.end());
  for (std::size_t panels = kMinPanels;; panels *= 2) {
    PanelIntegrator rect(kernel, truth, breakpoints(required, hi, panels));
    const auto size = static_cast<Eigen::Index>(rect.panels());
    Eigen::MatrixXd cell(size, size);
    double total_abs = 0.0;
    for (Eigen::Index p = 0; p < size; ++p) {
      for (Eigen::Index q = p; q < size; ++q) {
        const double v = rect.cell(static_cast<std::size_t>(p), static_cast<std::size_t>(q));
        cell(p, q) = v;
        cell(q, p) = v;
        total_abs += std::abs(v) * (p == q ? 1.0 : 2.0);
      }
    }
    const bool converged = rect.error() <= rel_tol * total_abs + 1e-12;
    if (converged || 2 * panels > kMaxPanels) {
      check_quadrature(total_abs, rect.error(), rel_tol, "b_cov");
      Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(size + 1, size + 1);
      for (Eigen::Index p = 0; p < size; ++p) {
        for (Eigen::Index q = 0; q < size; ++q) {
          cum(p + 1, q + 1) = cell(p, q) + cum(p, q + 1) + cum(p + 1, q) - cum(p, q);
        }
      }
      breaks_out = rect.breaks();
      return cum;
    }
  }
}

Eigen::Index index_of(const std::vector<double>& breaks, double t) {
  const auto it = std::lower_bound(breaks.begin(), breaks.end(), t - 1e-12 * std::max(1.0, t));
  return static_cast<Eigen::Index>(it - breaks.begin());
}

}  // namespace

double b_cov(double s, double m, double t, double n, const GammaKernel& kernel, const TrueModel& truth,
             double rel_tol) {
  if (m < 0.0 || n < 0.0) throw std::invalid_argument("b_cov: levels must be nonnegative");
  if (s <= 0.0 || t <= 0.0 || m == 0.0 || n == 0.0) return 0.0;
  require_positive_hbar(truth, s);
  require_positive_hbar(truth, t);
  std::vector<double> breaks;
  const auto cum = cumulative_integrals({0.0, s, t}, kernel, truth, rel_tol, breaks);
  const double integral = cum(index_of(breaks, s), index_of(breaks, t));
  if (s == t && integral < -10.0 * rel_tol) {
    throw QuadratureError("b_cov: negative variance " + std::to_string(integral));
  }
  return std::min(m, n) / std::sqrt(m * n) * integral;
}

Eigen::MatrixXd b_cov_matrix(std::span<const double> grid, const GammaKernel& kernel, const TrueModel& truth,
                             double rel_tol) {
  const auto size = static_cast<Eigen::Index>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument("b_cov_matrix: grid must be nonnegative and strictly increasing");
    }
    require_positive_hbar(truth, grid[i]);
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(size, size);
  if (grid.empty() || grid.back() <= 0.0) return cov;
  std::vector<double> required{0.0};
  required.insert(required.end(), grid.begin(), grid.end());
  std::vector<double> breaks;
  const auto cum = cumulative_integrals(required, kernel, truth, rel_tol, breaks);
  std::vector<Eigen::Index> idx;
  for (double g : grid) idx.push_back(index_of(breaks, g));
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j < size; ++j) cov(i, j) = cum(idx[i], idx[j]);
  }
  return cov;
}

PsdFactor psd_factor(const Eigen::MatrixXd& covariance, double ridge) {
  if (covariance.rows() != covariance.cols()) throw std::invalid_argument("psd_factor: matrix must be square");
  const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw FactorizationError("eigendecomposition failed", std::numeric_limits<double>::quiet_NaN());
  }
  const Eigen::VectorXd& eig = solver.eigenvalues();
  PsdFactor out;
  out.min_eigenvalue = eig.size() ? eig.minCoeff() : 0.0;
  if (!std::isfinite(out.min_eigenvalue) || !eig.allFinite()) {
    throw FactorizationError("covariance has non-finite eigenvalues", out.min_eigenvalue);
  }
  out.repair = std::max(0.0, -out.min_eigenvalue) + ridge;
  const Eigen::VectorXd root = (eig.array().max(0.0) + ridge).sqrt();
  out.root = solver.eigenvectors() * root.asDiagonal();
  if (!out.root.allFinite()) throw FactorizationError("factor has non-finite entries", out.min_eigenvalue);
  if (out.min_eigenvalue < 0.0) {
    spdlog::debug("psd repair: smallest eigenvalue {:.3e}, perturbation {:.3e}", out.min_eigenvalue, out.repair);
  }
  return out;
}

std::string to_string(PathMethod method) {
  switch (method) {
    case PathMethod::kiefer: return "kiefer";
    case PathMethod::integral: return "integral";
    case PathMethod::direct: return "direct";
  }
  return "unknown";
}

namespace {

Eigen::VectorXd standard_normals(Eigen::Index size, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd xi(size);
  for (Eigen::Index i = 0; i < size; ++i) xi(i) = normal(rng);
  return xi;
}

// Factor of a covariance whose zero-variance points (t = 0) are pinned at 0
// instead of receiving ridge noise; the root keeps one row per grid point.
PsdFactor pinned_factor(const Eigen::MatrixXd& cov) {
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    if (cov(i, i) != 0.0) live.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = cov(live[a], live[b]);
  }
  PsdFactor inner = psd_factor(sub);
  PsdFactor out{Eigen::MatrixXd::Zero(cov.rows(), k), inner.min_eigenvalue, inner.repair};
  for (Eigen::Index a = 0; a < k; ++a) out.root.row(live[a]) = inner.root.row(a);
  return out;
}

void check_grid(std::span<const double> grid, std::size_t max_size, const char* who) {
  if (grid.empty()) throw std::invalid_argument(std::string(who) + ": empty grid");
  if (grid.size() > max_size) {
    throw std::invalid_argument(std::string(who) + ": grid larger than " + std::to_string(max_size));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument(std::string(who) + ": grid must be nonnegative and strictly increasing");
    }
  }
}

}  // namespace

KieferSampler::KieferSampler(std::span<const double> grid, const GammaKernel& kernel)
    : grid_(grid.begin(), grid.end()) {
  check_grid(grid, kMaxGrid, "KieferSampler");
  gamma_ = kernel.tabulate(grid_);
  factor_ = pinned_factor(gamma_.values);
}

GaussianPath KieferSampler::draw(double level, std::mt19937_64& rng) const {
  if (level < 0.0) throw std::invalid_argument("Kiefer level must be nonnegative");
  GaussianPath path{grid_, std::vector<double>(grid_.size(), 0.0), level, PathMethod::kiefer};
  const Eigen::VectorXd xi = standard_normals(factor_.root.cols(), rng);
  if (level == 0.0) return path;
  const Eigen::VectorXd k = std::sqrt(level) * (factor_.root * xi);
  std::copy(k.data(), k.data() + k.size(), path.values.begin());
  return path;
}

std::vector<GaussianPath> KieferSampler::draw_nested(std::span<const double> levels, std::mt19937_64& rng) const {
  std::vector<GaussianPath> out;
  Eigen::VectorXd current = Eigen::VectorXd::Zero(factor_.root.rows());
  double previous = 0.0;
  for (double level : levels) {
    if (level < previous) throw std::invalid_argument("nested Kiefer levels must be nondecreasing");
    const Eigen::VectorXd xi = standard_normals(factor_.root.cols(), rng);
    current += std::sqrt(level - previous) * (factor_.root * xi);
    previous = level;
    out.push_back(GaussianPath{grid_, std::vector<double>(current.data(), current.data() + current.size()), level,
                               PathMethod::kiefer});
  }
  return out;
}

GaussianPath sample_kiefer(std::span<const double> grid, double level, const GammaKernel& kernel,
                           const RandomStream& stream) {
  KieferSampler sampler(grid, kernel);
  auto rng = stream.engine(Substream::kiefer);
  return sampler.draw(level, rng);
}

GaussianPath sample_b_integral(const GaussianPath& kpath, double n, const TrueModel& truth) {
  constexpr std::size_t kMinPoints = 256;
  if (kpath.grid.size() < kMinPoints) {
    throw std::invalid_argument("sample_b_integral: Kiefer path needs at least 256 grid points");
  }
  if (kpath.grid.size() != kpath.values.size()) throw std::invalid_argument("sample_b_integral: malformed path");
  GaussianPath b{kpath.grid, std::vector<double>(kpath.grid.size(), 0.0), n, PathMethod::integral};
  if (n <= 0.0) return b;
  const double inv_sqrt_n = 1.0 / std::sqrt(n);
  double prev_t = kpath.grid[0];
  require_positive_hbar(truth, prev_t);
  double prev_h = kpath.values[0] * inv_sqrt_n * b_weight(truth, prev_t);
  // B starts at grid[0]; the integral over [0, grid[0]] is taken as one trapezoid with K(0) = 0.
  double acc = 0.5 * prev_h * prev_t;
  b.values[0] = acc;
  for (std::size_t j = 1; j < kpath.grid.size(); ++j) {
    const double t = kpath.grid[j];
    require_positive_hbar(truth, t);
    const double h = kpath.values[j] * inv_sqrt_n * b_weight(truth, t);
    acc += 0.5 * (prev_h + h) * (t - prev_t);
    b.values[j] = acc;
    prev_t = t;
    prev_h = h;
  }
  return b;
}

DirectBSampler::DirectBSampler(std::span<const double> grid, const GammaKernel& kernel, const TrueModel& truth)
    : grid_(grid.begin(), grid.end()) {
  check_grid(grid, kMaxGrid, "DirectBSampler");
  covariance_ = b_cov_matrix(grid_, kernel, truth);
  factor_ = pinned_factor(covariance_);
}

GaussianPath DirectBSampler::draw(double level, std::mt19937_64& rng) const {
  if (level < 0.0) throw std::invalid_argument("B level must be nonnegative");
  GaussianPath path{grid_, std::vector<double>(grid_.size(), 0.0), level, PathMethod::direct};
  const Eigen::VectorXd xi = standard_normals(factor_.root.cols(), rng);
  if (level == 0.0) return path;
  const Eigen::VectorXd b = factor_.root * xi;
  std::copy(b.data(), b.data() + b.size(), path.values.begin());
  return path;
}

GaussianPath sample_b_direct(std::span<const double> grid, double n, const GammaKernel& kernel,
                             const TrueModel& truth, const RandomStream& stream) {
  DirectBSampler sampler(grid, kernel, truth);
  auto rng = stream.engine(Substream::limit);
  return sampler.draw(n, rng);
}

void write_gaussian_path_csv(std::ostream& os, const GaussianPath& path) {
  os << "grid,value\n";
  char buf[80];
  for (std::size_t i = 0; i < path.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", path.grid[i], path.values[i]);
    os << buf;
  }
}

}  // namespace mixsurv
