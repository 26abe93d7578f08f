#include "mixsurv/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <cstdio>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <spdlog/spdlog.h>

#include "mixsurv/errors.hpp"
#include "mixsurv/normal.hpp"

namespace mixsurv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-9;

void check_rho(double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw StationarityError("AR(1) correlation must satisfy |rho| < 1, got " + std::to_string(rho));
  }
}

template <class Density>
double integrate_density(Density density, double upper) {
  double error = 0.0;
  double value = 0.0;
  if (std::isinf(upper)) {
    boost::math::quadrature::exp_sinh<double> integrator;
    double l1 = 0.0;
    value = integrator.integrate(density, 0.0, kInf, kQuadTol, &error, &l1);
  } else {
    if (upper <= 0.0) return 0.0;
    value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(density, 0.0, upper, 15, kQuadTol,
                                                                           &error);
  }
  if (!std::isfinite(value) || error > 1e3 * kQuadTol * std::max(1.0, std::abs(value))) {
    throw QuadratureError("sub-distribution quadrature did not converge (error estimate " +
                          std::to_string(error) + ")");
  }
  return value;
}
}  // namespace

void MixingModel::validate() const {
  check_rho(rho_x);
  check_rho(rho_y);
}

double CensoredSample::censoring_proportion() const noexcept {
  if (z.empty()) return 0.0;
  std::size_t censored = 0;
  for (auto d : delta) censored += d == 0 ? 1 : 0;
  return static_cast<double>(censored) / static_cast<double>(z.size());
}

void CensoredSample::validate() const {
  if (z.size() != delta.size()) throw std::invalid_argument("z and delta differ in length");
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] >= 0.0) || !std::isfinite(z[i])) {
      throw std::invalid_argument("observation " + std::to_string(i) + " is not a finite nonnegative time");
    }
    if (delta[i] > 1) throw std::invalid_argument("censoring indicator must be 0 or 1");
  }
  if (has_latent() && (x.size() != z.size() || y.size() != z.size())) {
    throw std::invalid_argument("latent vectors differ in length from z");
  }
}

std::vector<double> ar1_gaussian(std::size_t n, double rho, std::mt19937_64& rng) {
  check_rho(rho);
  if (n == 0) throw std::invalid_argument("ar1_gaussian requires n >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation_sd = std::sqrt(1.0 - rho * rho);
  std::vector<double> e(n);
  e[0] = normal(rng);
  for (std::size_t i = 1; i < n; ++i) e[i] = rho * e[i - 1] + innovation_sd * normal(rng);
  return e;
}

std::vector<double> ar1_gaussian(std::size_t n, double rho, const RandomStream& stream) {
  auto rng = stream.engine();
  return ar1_gaussian(n, rho, rng);
}

std::vector<double> to_marginal(std::span<const double> gauss, const Marginal& marginal) {
  std::vector<double> out(gauss.size());
  std::transform(gauss.begin(), gauss.end(), out.begin(), [&](double g) {
    return g > 0.0 ? marginal.quantile_sf(norm_sf(g)) : marginal.quantile(norm_cdf(g));
  });
  return out;
}

CensoredSample generate_sample(const MixingModel& model, std::size_t n, const RandomStream& stream,
                               bool keep_latent) {
  model.validate();
  if (n == 0) throw std::invalid_argument("generate_sample requires n >= 1");
  auto rng_x = stream.engine(Substream::lifetime);
  auto rng_y = stream.engine(Substream::censoring);
  const auto x = to_marginal(ar1_gaussian(n, model.rho_x, rng_x), model.lifetime);
  const auto y = to_marginal(ar1_gaussian(n, model.rho_y, rng_y), model.censoring);

  CensoredSample sample;
  sample.z.resize(n);
  sample.delta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sample.z[i] = std::min(x[i], y[i]);
    sample.delta[i] = x[i] <= y[i] ? 1 : 0;
  }

  std::vector<double> sorted = sample.z;
  std::sort(sorted.begin(), sorted.end());
  const auto ties = static_cast<std::size_t>(
      std::distance(std::unique(sorted.begin(), sorted.end()), sorted.end()));
  if (ties > 0) {
    spdlog::warn("generate_sample: {} tied observation(s) in floating point; kept in index order", ties);
  }

  if (keep_latent) {
    sample.x = x;
    sample.y = y;
  }
  return sample;
}

TrueModel::TrueModel(MixingModel model) : model_(std::move(model)) {
  model_.validate();
  closed_form_fstar_ =
      model_.lifetime.family() == Family::exponential && model_.censoring.family() == Family::exponential;
}

TrueModel true_model(const MixingModel& model) { return TrueModel(model); }

double TrueModel::hazard(double t) const noexcept {
  const double s = model_.lifetime.sf(t);
  return s > 0.0 ? f(t) / s : kInf;
}

double TrueModel::Fstar(double t) const {
  if (t <= 0.0) return 0.0;
  if (closed_form_fstar_) {
    const double lam = model_.lifetime.first();
    const double mu = model_.censoring.first();
    return lam / (lam + mu) * -std::expm1(-(lam + mu) * t);
  }
  // Z never exceeds either support end
  const double upper = std::min({t, model_.lifetime.support_upper(), model_.censoring.support_upper()});
  return integrate_density([this](double s) { return fstar_density(s); }, upper);
}

double TrueModel::Gstar(double t) const {
  if (t <= 0.0) return 0.0;
  if (closed_form_fstar_) {
    const double lam = model_.lifetime.first();
    const double mu = model_.censoring.first();
    return mu / (lam + mu) * -std::expm1(-(lam + mu) * t);
  }
  const double upper = std::min({t, model_.lifetime.support_upper(), model_.censoring.support_upper()});
  return integrate_density(
      [this](double s) { return model_.lifetime.sf(s) * model_.censoring.pdf(s); }, upper);
}

double TrueModel::tau(double epsilon) const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (closed_form_fstar_) {
    return -std::log(epsilon) / (model_.lifetime.first() + model_.censoring.first());
  }
  double hi = std::min(model_.lifetime.support_upper(), model_.censoring.support_upper());
  if (std::isinf(hi)) {
    hi = 1.0;
    while (Hbar(hi) > epsilon) hi *= 2.0;
  }
  auto fn = [&](double t) { return Hbar(t) - epsilon; };
  boost::math::tools::eps_tolerance<double> tol(52);
  const auto [lo_t, hi_t] = boost::math::tools::bisect(fn, 0.0, hi, tol);
  return hi_t;
}

double TrueModel::H_quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("H quantile level must lie in (0, 1)");
  return tau(1.0 - p);
}

void write_sample_csv(std::ostream& os, const CensoredSample& sample) {
  os << "z,delta\n";
  char buf[64];
  for (std::size_t i = 0; i < sample.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%d\n", sample.z[i], static_cast<int>(sample.delta[i]));
    os << buf;
  }
}

CensoredSample read_sample_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("sample CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "z,delta") throw ConfigError("sample CSV row 1: expected header `z,delta`, got `" + line + "`");

  CensoredSample sample;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ConfigError("sample CSV row " + std::to_string(row) + ": expected two fields");
    }
    const std::string zs = line.substr(0, comma);
    const std::string ds = line.substr(comma + 1);
    double z = 0.0;
    try {
      std::size_t used = 0;
      z = std::stod(zs, &used);
      if (used != zs.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("sample CSV row " + std::to_string(row) + ": malformed time `" + zs + "`");
    }
    if (!std::isfinite(z) || z < 0.0) {
      throw ConfigError("sample CSV row " + std::to_string(row) + ": time must be finite and nonnegative");
    }
    if (ds != "0" && ds != "1") {
      throw ConfigError("sample CSV row " + std::to_string(row) + ": delta must be 0 or 1, got `" + ds + "`");
    }
    sample.z.push_back(z);
    sample.delta.push_back(ds == "1" ? 1 : 0);
  }
  if (sample.z.empty()) throw ConfigError("sample CSV has no observations");
  return sample;
}

}  // namespace mixsurv
