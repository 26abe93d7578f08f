#pragma once

#include <string>

namespace mixsurv {

enum class Family { exponential, weibull, uniform };

/// Continuous, strictly increasing lifetime law with closed-form cdf,
/// density and quantile. Exponential{rate}, Weibull{shape, scale}, or
/// Uniform(0, upper).
class Marginal {
 public:
  static Marginal exponential(double rate);
  static Marginal weibull(double shape, double scale);
  static Marginal uniform(double upper);

  Family family() const noexcept { return family_; }
  // rate for exponential, shape for Weibull, upper end for uniform
  double first() const noexcept { return a_; }
  // scale for Weibull, unused otherwise
  double second() const noexcept { return b_; }

  double cdf(double t) const noexcept;
  double sf(double t) const noexcept;
  double pdf(double t) const noexcept;
  double quantile(double p) const;
  // Q(1 - q), evaluated from the upper-tail probability q directly.
  double quantile_sf(double q) const;
  // -log(1 - F(t))
  double cumulative_hazard(double t) const noexcept;
  double support_upper() const noexcept;

  std::string describe() const;

  friend bool operator==(const Marginal&, const Marginal&) = default;

 private:
  Marginal(Family family, double a, double b) : family_(family), a_(a), b_(b) {}

  Family family_;
  double a_;
  double b_;
};

}  // namespace mixsurv
