#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mixsurv/datagen.hpp"
#include "mixsurv/estimators.hpp"

namespace mixsurv {

// Normalizing sequences. a_n = (log log n / n)^{1/2}; b_n = n^{-1/2} (log n)^{-lambda};
// lambda_n = c * b_n.
struct RateParams {
  double lambda_exp = 1.0;
  double beta_exp = 0.0;
  double window_constant = 1.0;

  static double a_n(double n);
  static double b_n(double n, double lambda);
  double b_n(double n) const { return b_n(n, lambda_exp); }
  double lambda_n(double n) const { return window_constant * b_n(n); }
};

// max |value| over grid values and their left limits.
double sup_norm(const ProcessPath& path);
double sup_norm(const ProcessPath& path, const std::function<double(double)>& weight);

enum class Which { hazard, pl };

// sup_{[0,tau]} |Lhat - Lambda| or |Fhat - F|, unscaled.
double sup_deviation(const SampleEstimates& est, const TrueModel& truth, Which which, const AdmissibleRange& range,
                     std::size_t grid_points = 512);

// sup deviation * (n / log log n)^{1/2}; requires n >= 10.
double lil_stat(const SampleEstimates& est, const TrueModel& truth, Which which, const AdmissibleRange& range,
                std::size_t grid_points = 512);

// sup_p |Fhat(Qn(p)) - p|.
double bahadur_stat(const StepFunction& fhat, std::span<const double> p_grid);
// Largest jump of fhat at jump times in [t_lo, t_hi].
double max_jump(const StepFunction& fhat, double t_lo, double t_hi);

// sup_p sqrt(n) |Qn(p) - Q(p)| / sqrt(log log n); requires n >= 10.
double qdev_stat(const StepFunction& fhat, std::size_t n, const TrueModel& truth, std::span<const double> p_grid);

/// Largest spread max - min of the points (t_i, v_i) inside any window
/// |s - t| <= width. Points must be sorted by t; monotone-deque sliding window.
double window_oscillation(std::span<const double> t, std::span<const double> v, double width);
// O(m^2) reference for window_oscillation.
double window_oscillation_brute(std::span<const double> t, std::span<const double> v, double width);

// sup_{|s-t| <= width, s,t in [0,tau]} |Z_n2(s) - Z_n2(t)|.
double oscillation_stat(const SampleEstimates& est, const TrueModel& truth, double width,
                        const AdmissibleRange& range, std::size_t grid_points = 512);

// sup_p |rho_n(p) - Z_n2(Q(p))|.
double coupling_stat(const StepFunction& fhat, std::size_t n, const TrueModel& truth, std::span<const double> p_grid);
// sup_p |rho_n(p)|.
double sup_quantile_process(const StepFunction& fhat, std::size_t n, const TrueModel& truth,
                            std::span<const double> p_grid);

// sup_{[0,tau]} |(Fhat - F) - (1 - F)(Lhat - Lambda)|, unscaled.
double second_order_remainder(const SampleEstimates& est, const TrueModel& truth, const AdmissibleRange& range,
                       std::size_t grid_points = 512);
// The remainder times n / log log n; requires n >= 10.
double remainder_stat(const SampleEstimates& est, const TrueModel& truth, const AdmissibleRange& range,
                  std::size_t grid_points = 512);

// Two-sample Kolmogorov-Smirnov distance sup_x |edf_a(x) - edf_b(x)|.
double ks_distance(std::span<const double> a, std::span<const double> b);

struct RateFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

// OLS of log(median) on log(n); non-positive medians are dropped with a warning.
RateFit fit_rate(std::span<const double> sizes, std::span<const double> medians);

// Type-7 sample quantile of an unsorted sample.
double sample_quantile(std::vector<double> values, double q);

}  // namespace mixsurv
