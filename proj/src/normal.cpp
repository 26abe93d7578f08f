#include "mixsurv/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace mixsurv {

const std::array<double, 10> GaussLegendre20::nodes = {
    0.0765265211334973337546404, 0.2277858511416450780804962, 0.3737060887154195606725482,
    0.5108670019508270980043641, 0.6360536807265150254528367, 0.7463319064601507926143051,
    0.8391169718222188233945291, 0.9122344282513259058677524, 0.9639719272779137912676661,
    0.9931285991850949247861224};
const std::array<double, 10> GaussLegendre20::weights = {
    0.1527533871307258506980843, 0.1491729864726037467878287, 0.1420961093183820513292983,
    0.1316886384491766268984945, 0.1181945319615184173123774, 0.1019301198172404350367501,
    0.0832767415767047487247581, 0.0626720483341090635695065, 0.0406014298003869413310400,
    0.0176140071391521183118620};

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sum of w * f(1 - x) + w * f(1 + x) over a Gauss-Legendre positive half.
template <class Nodes, class Weights, class F>
double mirrored_sum(const Nodes& x, const Weights& w, F&& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += w[i] * (f(1.0 - x[i]) + f(1.0 + x[i]));
  }
  return sum;
}

// Node count as in Genz: 6 points for |r| < 0.3, 12 for |r| < 0.75, else 20.
template <class F>
double genz_sum(double abs_r, F&& f) {
  using G6 = boost::math::quadrature::gauss<double, 6>;
  using G12 = boost::math::quadrature::gauss<double, 12>;
  if (abs_r < 0.3) return mirrored_sum(G6::abscissa(), G6::weights(), f);
  if (abs_r < 0.75) return mirrored_sum(G12::abscissa(), G12::weights(), f);
  return mirrored_sum(GaussLegendre20::nodes, GaussLegendre20::weights, f);
}

// Tetrachoric series through r^4; error below 1e-16 for |r| < 1e-3.
double bvn_small_r(double h, double k, double r) {
  const double h2 = h * h, k2 = k * k;
  const double t1 = 1.0;
  const double t2 = h * k / 2.0;
  const double t3 = (h2 - 1.0) * (k2 - 1.0) / 6.0;
  const double t4 = h * (h2 - 3.0) * k * (k2 - 3.0) / 24.0;
  const double series = r * (t1 + r * (t2 + r * (t3 + r * t4)));
  return norm_sf(h) * norm_sf(k) + norm_pdf(h) * norm_pdf(k) * series;
}

}  // namespace

double norm_pdf(double x) noexcept { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); }

double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_sf(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double norm_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double norm_isf(double q) {
  if (q <= 0.0) return kInf;
  if (q >= 1.0) return -kInf;
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

double bvn_survival(double a, double b, double r) {
  if (std::isnan(a) || std::isnan(b) || std::isnan(r)) return std::numeric_limits<double>::quiet_NaN();
  r = std::clamp(r, -1.0, 1.0);
  if (a == kInf || b == kInf) return 0.0;
  if (a == -kInf) return b == -kInf ? 1.0 : norm_sf(b);
  if (b == -kInf) return norm_sf(a);
  if (r == 0.0) return norm_sf(a) * norm_sf(b);
  if (std::abs(r) < 1e-3) return std::clamp(bvn_small_r(a, b, r), 0.0, 1.0);

  const auto& x = GaussLegendre20::nodes;
  const auto& w = GaussLegendre20::weights;
  double h = a;
  double k = b;
  double hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    // Integrate phi2(h, k; t) over t in [0, r] after t = sin(theta).
    const double hs = 0.5 * (h * h + k * k);
    const double half = 0.5 * std::asin(r);
    bvn = genz_sum(std::abs(r), [&](double node) {
      const double sn = std::sin(half * node);
      return std::exp((sn * hk - hs) / (1.0 - sn * sn));
    });
    bvn = bvn * half / kTwoPi + norm_sf(h) * norm_sf(k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (std::abs(r) < 1.0) {
      const double as = 1.0 - r * r;
      double aa = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 80.0;
      double asr = -0.5 * (bs / as + hk);
      if (asr > -100.0) {
        bvn = aa * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
      }
      if (hk > -100.0) {
        const double bb = std::sqrt(bs);
        const double sp = std::sqrt(kTwoPi) * norm_cdf(-bb / aa);
        bvn -= std::exp(-0.5 * hk) * sp * bb * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
      }
      aa *= 0.5;
      double sum = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (double node : {1.0 - x[i], 1.0 + x[i]}) {
          const double xs = (aa * node) * (aa * node);
          asr = -0.5 * (bs / xs + hk);
          if (asr <= -100.0) continue;
          const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
          const double rs = std::sqrt(1.0 - xs);
          const double ep = std::exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
          sum += w[i] * std::exp(asr) * (sp - ep);
        }
      }
      bvn = (aa * sum - bvn) / kTwoPi;
    }
    if (r > 0.0) {
      bvn += norm_sf(std::max(h, k));
    } else if (h >= k) {
      bvn = -bvn;
    } else {
      const double lower = h < 0.0 ? norm_cdf(k) - norm_cdf(h) : norm_sf(h) - norm_sf(k);
      bvn = lower - bvn;
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

}  // namespace mixsurv
