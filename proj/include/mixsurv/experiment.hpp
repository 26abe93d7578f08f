#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mixsurv/datagen.hpp"
#include "mixsurv/estimators.hpp"
#include "mixsurv/stats.hpp"

namespace mixsurv {

enum class Statistic {
  sup_pl,        // sup |Fhat - F|
  sup_hazard,    // sup |Lhat - Lambda|
  lil,           // hazard deviation * (n / log log n)^{1/2}
  bahadur,       // sup_p |Fhat(Qn(p)) - p|
  qdev,          // sup_p sqrt(n) |Qn - Q| / sqrt(log log n)
  oscillation,   // modulus of Z_n2 over windows lambda_n
  coupling,      // sup_p |rho_n(p) - Z_n2(Q(p))|
  remainder,         // second-order remainder * n / log log n
  ksdist,        // KS between sup laws of the empirical and limit processes
  sup_quantile,  // sup_p |rho_n(p)|
};

std::string to_string(Statistic s);
// Throws ConfigError listing the valid names.
Statistic parse_statistic(const std::string& name);
const std::vector<Statistic>& all_statistics();

struct ExperimentConfig {
  MixingModel model;
  std::vector<std::size_t> sizes{250, 1000, 4000};
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  double tau_epsilon = 0.05;
  double p0 = 0.1;
  double p1 = 0.9;
  std::size_t grid_size = 512;
  std::size_t limit_grid_size = 257;
  RateParams rates;
  std::vector<Statistic> statistics{Statistic::sup_pl};

  void validate() const;
  std::vector<double> p_grid() const { return uniform_grid(p0, p1, grid_size); }
};

struct RawRow {
  std::string statistic;
  std::size_t n = 0;
  std::size_t rep = 0;
  double value = 0.0;
  bool valid = false;
};

struct SummaryRow {
  std::string statistic;
  std::size_t n = 0;
  double median = 0.0;
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  std::size_t reps_valid = 0;
  std::size_t reps = 0;
  // At least 90% of replications produced a value.
  bool valid = false;
};

struct RateFitRow {
  std::string statistic;
  RateFit fit;
};

struct RateSummary {
  std::vector<RawRow> raw;
  std::vector<SummaryRow> summary;
  std::vector<RateFitRow> fits;

  bool all_valid() const;
  const SummaryRow* find(const std::string& statistic, std::size_t n) const;
  std::vector<double> values(const std::string& statistic, std::size_t n) const;
};

/// Sup functionals of the Gaussian limit, one pair per draw:
///   pl[i]       = sup_{t in [0,tau]} |(1 - F(t)) B(t, n)|
///   quantile[i] = sup_{p in p_grid} (1 - p) |B(Q(p), n)|
/// B is built from Kiefer draws on a uniform grid of `grid_size` points over
/// [0, tau], continued with the same spacing up to Q(p1).
struct LimitSupSamples {
  std::vector<double> pl;
  std::vector<double> quantile;
};

LimitSupSamples limit_sup_samples(const TrueModel& truth, const AdmissibleRange& range,
                                  std::span<const double> p_grid, std::size_t grid_size, std::size_t draws,
                                  const RandomStream& base, std::size_t jobs = 1);

// Runs body(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

/// Replication r at every size uses RandomStream{seed, r}, so the samples for
/// growing n share their leading observations. Failures inside a replication
/// (e.g. an unattained quantile) become invalid rows.
RateSummary run_experiment(const ExperimentConfig& config, std::size_t jobs = 1);

// `statistic,n,rep,value,valid`
void write_raw_csv(std::ostream& os, const RateSummary& summary);
// `statistic,n,median,mean,q05,q95,reps_valid`; invalid rows carry nan statistics.
void write_summary_csv(std::ostream& os, const RateSummary& summary);
// [{statistic, slope, stderr}, ...]
std::string rates_json(const RateSummary& summary);

std::vector<SummaryRow> read_summary_csv(std::istream& is);

std::string describe_statistic(const std::string& name);

}  // namespace mixsurv
