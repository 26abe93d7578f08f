#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mixsurv/datagen.hpp"
#include "mixsurv/step_function.hpp"

namespace mixsurv {

// Empirical at-risk proportion Ybar(t) = #{z_i >= t}/n (left-continuous) and
// uncensored-event proportion Nbar(t) = #{z_i <= t, delta_i = 1}/n.
struct Counting {
  StepFunction at_risk;
  StepFunction events;
};

Counting counting(const CensoredSample& sample);

/// Product-limit estimate of F. Tied event times contribute one factor
/// (1 - d/Y); past the largest observation the estimate stays at its last
/// value, which is below 1 when that observation is censored.
StepFunction km(const CensoredSample& sample);
// 1 - km(sample), accumulated as the product of (Y - d)/Y.
StepFunction km_survival(const CensoredSample& sample);

StepFunction nelson_aalen(const CensoredSample& sample);

// Qn(p) = inf{t : Fhat(t) >= p}. Throws QuantileNotAttained when p > sup Fhat.
double pl_quantile(const StepFunction& fhat, double p);

// Sup norms and process paths live on [0, tau], tau = inf{t : Hbar(t) <= epsilon}.
struct AdmissibleRange {
  double tau = 0.0;
  double epsilon = 0.05;
};

AdmissibleRange admissible_range(const TrueModel& truth, double epsilon = 0.05);

enum class ProcessKind { hazard, pl, quantile };
std::string to_string(ProcessKind kind);

/// Values of a scaled estimation-error process on a grid. left_values holds
/// the left limits at each grid point (equal to values where the process has
/// no jump there).
struct ProcessPath {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> left_values;
  std::size_t n = 0;
  ProcessKind kind = ProcessKind::pl;
};

// sqrt(n) (Lhat - Lambda) on the grid.
ProcessPath hazard_process(const StepFunction& lhat, const TrueModel& truth, std::span<const double> grid,
                           std::size_t n, const AdmissibleRange& range);
// sqrt(n) (Fhat - F) on the grid.
ProcessPath pl_process(const StepFunction& fhat, const TrueModel& truth, std::span<const double> grid,
                       std::size_t n, const AdmissibleRange& range);
// sqrt(n) f(Q(p)) (Q(p) - Qn(p)) on a grid of probabilities.
ProcessPath quantile_process(const StepFunction& fhat, const TrueModel& truth, std::span<const double> p_grid,
                             std::size_t n);
ProcessPath quantile_process(const CensoredSample& sample, const TrueModel& truth,
                             std::span<const double> p_grid);

// Jump times of fn inside [0, tau] merged with `uniform_points` equispaced points.
std::vector<double> sup_grid(const StepFunction& fn, double tau, std::size_t uniform_points = 512);
std::vector<double> uniform_grid(double lo, double hi, std::size_t points);

// Estimates reused by several statistics of one replication.
struct SampleEstimates {
  std::size_t n = 0;
  StepFunction fhat;
  StepFunction lhat;

  static SampleEstimates from(const CensoredSample& sample);
};

// CSV `grid,value`.
void write_path_csv(std::ostream& os, const ProcessPath& path);
// JSON sidecar {n, kind, tau, epsilon}.
std::string path_sidecar_json(const ProcessPath& path, const AdmissibleRange& range);

}  // namespace mixsurv
