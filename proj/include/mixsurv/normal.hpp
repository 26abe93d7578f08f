#pragma once

#include <array>

namespace mixsurv {

double norm_pdf(double x) noexcept;
double norm_cdf(double x) noexcept;
// Upper tail P(U > x), accurate far into the right tail.
double norm_sf(double x) noexcept;
// Phi^{-1}(p); returns -inf / +inf at p = 0 / 1.
double norm_quantile(double p);
// The x with P(U > x) = q, computed without forming 1 - q.
double norm_isf(double q);

/// Upper orthant probability P(U > a, V > b) for a standard bivariate normal
/// pair with correlation r.
///
/// Gauss-Legendre quadrature of the single-integral form over the correlation
/// with 6, 12 or 20 nodes as |r| grows, switching to the asymptotic expansion
/// of the integrand in sqrt(1 - r^2) when |r| >= 0.925 (Drezner-Wesolowsky /
/// Genz). For |r| < 1e-3 the tetrachoric series through r^4 is used.
/// Infinite thresholds are allowed. Absolute error is below 1e-14 in practice.
double bvn_survival(double a, double b, double r);

// 20-point Gauss-Legendre rule on [-1, 1], positive half (nodes, weights).
struct GaussLegendre20 {
  static const std::array<double, 10> nodes;
  static const std::array<double, 10> weights;
};

}  // namespace mixsurv
