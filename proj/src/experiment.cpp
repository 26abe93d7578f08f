#include "mixsurv/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mixsurv/errors.hpp"
#include "mixsurv/kernel.hpp"
#include "mixsurv/limit.hpp"

namespace mixsurv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinValidFraction = 0.9;

const char* name_of(Statistic s) {
  switch (s) {
    case Statistic::sup_pl: return "sup_pl";
    case Statistic::sup_hazard: return "sup_hazard";
    case Statistic::lil: return "lil";
    case Statistic::bahadur: return "bahadur";
    case Statistic::qdev: return "qdev";
    case Statistic::oscillation: return "oscillation";
    case Statistic::coupling: return "coupling";
    case Statistic::remainder: return "remainder";
    case Statistic::ksdist: return "ksdist";
    case Statistic::sup_quantile: return "sup_quantile";
  }
  return "unknown";
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Statistic s) { return name_of(s); }

const std::vector<Statistic>& all_statistics() {
  static const std::vector<Statistic> all{Statistic::sup_pl,      Statistic::sup_hazard, Statistic::lil,
                                          Statistic::bahadur,     Statistic::qdev,       Statistic::oscillation,
                                          Statistic::coupling,    Statistic::remainder,      Statistic::ksdist,
                                          Statistic::sup_quantile};
  return all;
}

Statistic parse_statistic(const std::string& name) {
  for (auto s : all_statistics()) {
    if (name == name_of(s)) return s;
  }
  std::string valid;
  for (auto s : all_statistics()) valid += std::string(valid.empty() ? "" : ", ") + name_of(s);
  throw ConfigError("unknown statistic `" + name + "`; valid names: " + valid);
}

void ExperimentConfig::validate() const {
  model.validate();
  if (sizes.empty()) throw ConfigError("experiment needs at least one sample size");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw ConfigError("sample sizes must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw ConfigError("sample sizes must be strictly increasing");
  }
  if (reps == 0) throw ConfigError("reps must be >= 1");
  if (!(p0 > 0.0 && p0 <= p1 && p1 < 1.0)) throw ConfigError("quantile range must satisfy 0 < p0 <= p1 < 1");
  if (!(tau_epsilon > 0.0 && tau_epsilon < 1.0)) throw ConfigError("tau_epsilon must lie in (0, 1)");
  if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
  if (limit_grid_size < 256) throw ConfigError("limit_grid_size must be >= 256");
  if (statistics.empty()) throw ConfigError("no statistics selected");
}

bool RateSummary::all_valid() const {
  return std::all_of(summary.begin(), summary.end(), [](const SummaryRow& r) { return r.valid; });
}

const SummaryRow* RateSummary::find(const std::string& statistic, std::size_t n) const {
  for (const auto& r : summary) {
    if (r.statistic == statistic && r.n == n) return &r;
  }
  return nullptr;
}

std::vector<double> RateSummary::values(const std::string& statistic, std::size_t n) const {
  std::vector<double> out;
  for (const auto& r : raw) {
    if (r.statistic == statistic && r.n == n && r.valid) out.push_back(r.value);
  }
  return out;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

LimitSupSamples limit_sup_samples(const TrueModel& truth, const AdmissibleRange& range,
                                  std::span<const double> p_grid, std::size_t grid_size, std::size_t draws,
                                  const RandomStream& base, std::size_t jobs) {
  if (grid_size < 256) throw std::invalid_argument("limit grid needs at least 256 points");
  std::vector<double> grid = uniform_grid(0.0, range.tau, grid_size);
  const std::size_t in_range = grid.size();
  double q_max = 0.0;
  for (double p : p_grid) q_max = std::max(q_max, truth.Q(p));
  const double step = range.tau / static_cast<double>(grid_size - 1);
  for (std::size_t k = grid_size; grid.back() < q_max; ++k) grid.push_back(step * static_cast<double>(k));

  const GammaKernel kernel(truth.model());
  const KieferSampler sampler(grid, kernel);

  std::vector<double> one_minus_f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) one_minus_f[i] = 1.0 - truth.F(grid[i]);
  struct QuantilePoint {
    std::size_t lo;
    double frac;
    double weight;
  };
  std::vector<QuantilePoint> qpoints;
  for (double p : p_grid) {
    const double q = truth.Q(p);
    const auto it = std::upper_bound(grid.begin(), grid.end(), q);
    std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - grid.begin()), grid.size() - 1);
    const std::size_t lo = hi == 0 ? 0 : hi - 1;
    if (hi == lo) ++hi;
    const double frac = std::clamp((q - grid[lo]) / (grid[hi] - grid[lo]), 0.0, 1.0);
    qpoints.push_back({lo, frac, 1.0 - p});
  }

  LimitSupSamples out{std::vector<double>(draws), std::vector<double>(draws)};
  parallel_for(draws, jobs, [&](std::size_t i) {
    auto rng = RandomStream{base.seed, base.stream_id + i}.engine(Substream::kiefer);
    const auto b = sample_b_integral(sampler.draw(1.0, rng), 1.0, truth);
    double sup_pl = 0.0;
    for (std::size_t j = 0; j < in_range; ++j) sup_pl = std::max(sup_pl, std::abs(one_minus_f[j] * b.values[j]));
    double sup_q = 0.0;
    for (const auto& qp : qpoints) {
      const double v = b.values[qp.lo] + qp.frac * (b.values[qp.lo + 1] - b.values[qp.lo]);
      sup_q = std::max(sup_q, qp.weight * std::abs(v));
    }
    out.pl[i] = sup_pl;
    out.quantile[i] = sup_q;
  });
  return out;
}

namespace {

struct RepValues {
  std::map<Statistic, double> values;  // missing key -> invalid
  double sup_pl_scaled = kNaN;
  double sup_rho = kNaN;
};

template <class F>
void record(RepValues& rv, Statistic s, F&& compute) {
  try {
    const double v = compute();
    if (std::isfinite(v)) rv.values[s] = v;
  } catch (const std::exception&) {
  }
}

RepValues run_replication(const ExperimentConfig& cfg, const TrueModel& truth, const AdmissibleRange& range,
                          std::span<const double> p_grid, std::size_t n, std::size_t rep, bool need_ks) {
  RepValues rv;
  const auto sample = generate_sample(cfg.model, n, RandomStream{cfg.seed, rep});
  const auto est = SampleEstimates::from(sample);
  const std::size_t g = cfg.grid_size;
  auto wants = [&](Statistic s) {
    return std::find(cfg.statistics.begin(), cfg.statistics.end(), s) != cfg.statistics.end();
  };
  for (Statistic s : cfg.statistics) {
    switch (s) {
      case Statistic::sup_pl:
        record(rv, s, [&] { return sup_deviation(est, truth, Which::pl, range, g); });
        break;
      case Statistic::sup_hazard:
        record(rv, s, [&] { return sup_deviation(est, truth, Which::hazard, range, g); });
        break;
      case Statistic::lil:
        record(rv, s, [&] { return lil_stat(est, truth, Which::hazard, range, g); });
        break;
      case Statistic::bahadur:
        record(rv, s, [&] { return bahadur_stat(est.fhat, p_grid); });
        break;
      case Statistic::qdev:
        record(rv, s, [&] { return qdev_stat(est.fhat, n, truth, p_grid); });
        break;
      case Statistic::oscillation:
        record(rv, s, [&] { return oscillation_stat(est, truth, cfg.rates.lambda_n(static_cast<double>(n)), range, g); });
        break;
      case Statistic::coupling:
        record(rv, s, [&] { return coupling_stat(est.fhat, n, truth, p_grid); });
        break;
      case Statistic::remainder:
        record(rv, s, [&] { return remainder_stat(est, truth, range, g); });
        break;
      case Statistic::sup_quantile:
        record(rv, s, [&] { return sup_quantile_process(est.fhat, n, truth, p_grid); });
        break;
      case Statistic::ksdist:
        break;
    }
  }
  if (need_ks || wants(Statistic::ksdist)) {
    try {
      rv.sup_pl_scaled = std::sqrt(static_cast<double>(n)) * sup_deviation(est, truth, Which::pl, range, g);
    } catch (const std::exception&) {
    }
    try {
      rv.sup_rho = sup_quantile_process(est.fhat, n, truth, p_grid);
    } catch (const std::exception&) {
    }
  }
  return rv;
}

SummaryRow summarize(const std::string& name, std::size_t n, const std::vector<double>& values, std::size_t reps) {
  SummaryRow row;
  row.statistic = name;
  row.n = n;
  row.reps = reps;
  row.reps_valid = values.size();
  row.valid = static_cast<double>(values.size()) >= kMinValidFraction * static_cast<double>(reps) && !values.empty();
  if (!row.valid) {
    row.median = row.mean = row.q05 = row.q95 = kNaN;
    return row;
  }
  row.median = sample_quantile(values, 0.5);
  row.q05 = sample_quantile(values, 0.05);
  row.q95 = sample_quantile(values, 0.95);
  row.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return row;
}

}  // namespace

RateSummary run_experiment(const ExperimentConfig& config, std::size_t jobs) {
  config.validate();
  const TrueModel truth(config.model);
  const auto range = admissible_range(truth, config.tau_epsilon);
  const auto p_grid = config.p_grid();
  const bool ks = std::find(config.statistics.begin(), config.statistics.end(), Statistic::ksdist) !=
                  config.statistics.end();

  LimitSupSamples limit;
  if (ks) {
    // Stream ids past the data replications keep limit draws disjoint from them.
    limit = limit_sup_samples(truth, range, p_grid, config.limit_grid_size, config.reps,
                              RandomStream{config.seed, 1ULL << 40}, jobs);
  }

  RateSummary out;
  std::map<std::string, std::vector<double>> medians_by_stat;
  std::vector<std::string> stat_order;
  for (Statistic s : config.statistics) {
    stat_order.push_back(to_string(s));
    if (s == Statistic::ksdist) stat_order.push_back("ksdist_quantile");
  }

  std::map<std::pair<std::string, std::size_t>, SummaryRow> rows;
  for (std::size_t n : config.sizes) {
    std::vector<RepValues> reps(config.reps);
    parallel_for(config.reps, jobs, [&](std::size_t r) {
      reps[r] = run_replication(config, truth, range, p_grid, n, r, ks);
    });

    for (Statistic s : config.statistics) {
      if (s == Statistic::ksdist) continue;
      const std::string name = to_string(s);
      std::vector<double> valid_values;
      for (std::size_t r = 0; r < reps.size(); ++r) {
        const auto it = reps[r].values.find(s);
        const bool ok = it != reps[r].values.end();
        out.raw.push_back(RawRow{name, n, r, ok ? it->second : kNaN, ok});
        if (ok) valid_values.push_back(it->second);
      }
      rows[{name, n}] = summarize(name, n, valid_values, config.reps);
    }

    if (ks) {
      std::vector<double> emp_pl, emp_rho;
      for (const auto& rv : reps) {
        if (std::isfinite(rv.sup_pl_scaled)) emp_pl.push_back(rv.sup_pl_scaled);
        if (std::isfinite(rv.sup_rho)) emp_rho.push_back(rv.sup_rho);
      }
      auto ks_row = [&](const std::string& name, const std::vector<double>& emp, const std::vector<double>& lim) {
        const bool enough = static_cast<double>(emp.size()) >= kMinValidFraction * static_cast<double>(config.reps);
        const double v = enough ? ks_distance(emp, lim) : kNaN;
        out.raw.push_back(RawRow{name, n, 0, v, enough});
        SummaryRow row = summarize(name, n, enough ? std::vector<double>{v} : std::vector<double>{}, 1);
        rows[{name, n}] = row;
      };
      ks_row("ksdist", emp_pl, limit.pl);
      ks_row("ksdist_quantile", emp_rho, limit.quantile);
    }
  }

  for (const auto& name : stat_order) {
    std::vector<double> sizes, medians;
    for (std::size_t n : config.sizes) {
      const auto& row = rows.at({name, n});
      out.summary.push_back(row);
      if (row.valid) {
        sizes.push_back(static_cast<double>(n));
        medians.push_back(row.median);
      }
    }
    if (sizes.size() >= 3) {
      try {
        out.fits.push_back(RateFitRow{name, fit_rate(sizes, medians)});
      } catch (const std::invalid_argument&) {
      }
    }
  }
  // Raw rows grouped by statistic, then n, then replication.
  std::stable_sort(out.raw.begin(), out.raw.end(), [&](const RawRow& a, const RawRow& b) {
    const auto ia = std::find(stat_order.begin(), stat_order.end(), a.statistic);
    const auto ib = std::find(stat_order.begin(), stat_order.end(), b.statistic);
    return ia < ib;
  });
  return out;
}

void write_raw_csv(std::ostream& os, const RateSummary& summary) {
  os << "statistic,n,rep,value,valid\n";
  for (const auto& r : summary.raw) {
    os << r.statistic << ',' << r.n << ',' << r.rep << ',' << fmt_double(r.value) << ',' << (r.valid ? 1 : 0)
       << '\n';
  }
}

void write_summary_csv(std::ostream& os, const RateSummary& summary) {
  os << "statistic,n,median,mean,q05,q95,reps_valid\n";
  for (const auto& r : summary.summary) {
    os << r.statistic << ',' << r.n << ',' << fmt_double(r.median) << ',' << fmt_double(r.mean) << ','
       << fmt_double(r.q05) << ',' << fmt_double(r.q95) << ',' << r.reps_valid << '\n';
  }
}

std::string rates_json(const RateSummary& summary) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& f : summary.fits) {
    nlohmann::ordered_json j;
    j["statistic"] = f.statistic;
    j["slope"] = f.fit.slope;
    j["stderr"] = std::isfinite(f.fit.std_error) ? nlohmann::ordered_json(f.fit.std_error) : nlohmann::ordered_json();
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

std::vector<SummaryRow> read_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "statistic,n,median,mean,q05,q95,reps_valid") {
    throw ConfigError("summary CSV: missing or unexpected header");
  }
  std::vector<SummaryRow> rows;
  std::size_t row_no = 1;
  while (std::getline(is, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) throw ConfigError("summary CSV row " + std::to_string(row_no) + ": expected 7 fields");
    try {
      SummaryRow r;
      r.statistic = fields[0];
      r.n = std::stoul(fields[1]);
      r.median = std::stod(fields[2]);
      r.mean = std::stod(fields[3]);
      r.q05 = std::stod(fields[4]);
      r.q95 = std::stod(fields[5]);
      r.reps_valid = std::stoul(fields[6]);
      r.reps = r.reps_valid;
      r.valid = std::isfinite(r.median);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ConfigError("summary CSV row " + std::to_string(row_no) + ": malformed number");
    }
  }
  return rows;
}

std::string describe_statistic(const std::string& name) {
  static const std::map<std::string, std::string> text{
      {"sup_pl", "uniform error of the product-limit estimate on [0, tau]; expected to shrink like "
                 "(log log n / n)^{1/2}"},
      {"sup_hazard", "uniform error of the Nelson-Aalen estimate on [0, tau]; same expected rate"},
      {"lil", "hazard error scaled by (n / log log n)^{1/2}; law-of-the-iterated-logarithm bound says it stays "
              "bounded"},
      {"bahadur", "inversion error sup |Fhat(Qn(p)) - p|; never exceeds the largest jump, order 1/n up to logs"},
      {"qdev", "quantile error sqrt(n) |Qn - Q| / sqrt(log log n); stays bounded"},
      {"oscillation", "modulus of sqrt(n)(Fhat - F) over windows of width lambda_n; shrinks with n"},
      {"coupling", "distance between the quantile process and the product-limit process at Q(p); vanishes "
                   "relative to sup |rho_n|"},
      {"remainder", "second-order gap between Fhat - F and (1 - F)(Lhat - Lambda), scaled by n / log log n; stays "
                "bounded"},
      {"ksdist", "KS distance between the laws of sup |Z_n2| and sup |(1 - F) B|; should decrease with n"},
      {"ksdist_quantile", "KS distance between the laws of sup |rho_n| and sup (1 - p) |B(Q(p))|; should decrease "
                          "with n"},
      {"sup_quantile", "sup of the density-normalized quantile process |rho_n|"},
  };
  const auto it = text.find(name);
  return it == text.end() ? std::string("(no description)") : it->second;
}

}  // namespace mixsurv
