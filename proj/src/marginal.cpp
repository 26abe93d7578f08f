#include "mixsurv/marginal.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mixsurv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}
}  // namespace

Marginal Marginal::exponential(double rate) {
  require_positive(rate, "exponential rate");
  return Marginal(Family::exponential, rate, 0.0);
}

Marginal Marginal::weibull(double shape, double scale) {
  require_positive(shape, "weibull shape");
  require_positive(scale, "weibull scale");
  return Marginal(Family::weibull, shape, scale);
}

Marginal Marginal::uniform(double upper) {
  require_positive(upper, "uniform upper bound");
  return Marginal(Family::uniform, upper, 0.0);
}

double Marginal::cdf(double t) const noexcept {
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::exponential: return -std::expm1(-a_ * t);
    case Family::weibull: return -std::expm1(-std::pow(t / b_, a_));
    case Family::uniform: return t >= a_ ? 1.0 : t / a_;
  }
  return 0.0;
}

double Marginal::sf(double t) const noexcept {
  if (t <= 0.0) return 1.0;
  switch (family_) {
    case Family::exponential: return std::exp(-a_ * t);
    case Family::weibull: return std::exp(-std::pow(t / b_, a_));
    case Family::uniform: return t >= a_ ? 0.0 : 1.0 - t / a_;
  }
  return 1.0;
}

double Marginal::pdf(double t) const noexcept {
  if (t < 0.0) return 0.0;
  switch (family_) {
    case Family::exponential: return a_ * std::exp(-a_ * t);
    case Family::weibull: {
      if (t == 0.0) return a_ < 1.0 ? kInf : (a_ == 1.0 ? 1.0 / b_ : 0.0);
      const double u = t / b_;
      return a_ / b_ * std::pow(u, a_ - 1.0) * std::exp(-std::pow(u, a_));
    }
    case Family::uniform: return t > a_ ? 0.0 : 1.0 / a_;
  }
  return 0.0;
}

double Marginal::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("quantile level outside [0, 1]");
  if (family_ == Family::uniform) return p * a_;
  if (p == 1.0) return kInf;
  switch (family_) {
    case Family::exponential: return -std::log1p(-p) / a_;
    case Family::weibull: return b_ * std::pow(-std::log1p(-p), 1.0 / a_);
    case Family::uniform: break;
  }
  return 0.0;
}

double Marginal::quantile_sf(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("tail probability outside [0, 1]");
  if (family_ == Family::uniform) return (1.0 - q) * a_;
  if (q == 0.0) return kInf;
  switch (family_) {
    case Family::exponential: return -std::log(q) / a_;
    case Family::weibull: return b_ * std::pow(-std::log(q), 1.0 / a_);
    case Family::uniform: break;
  }
  return 0.0;
}

double Marginal::cumulative_hazard(double t) const noexcept {
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::exponential: return a_ * t;
    case Family::weibull: return std::pow(t / b_, a_);
    case Family::uniform: return t >= a_ ? kInf : -std::log1p(-t / a_);
  }
  return 0.0;
}

double Marginal::support_upper() const noexcept {
  return family_ == Family::uniform ? a_ : kInf;
}

std::string Marginal::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family_) {
    case Family::exponential: os << "Exponential(rate=" << a_ << ")"; break;
    case Family::weibull: os << "Weibull(shape=" << a_ << ", scale=" << b_ << ")"; break;
    case Family::uniform: os << "Uniform(0, " << a_ << ")"; break;
  }
  return os.str();
}

}  // namespace mixsurv
