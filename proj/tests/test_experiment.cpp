#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mixsurv/config.hpp"
#include "mixsurv/errors.hpp"
#include "mixsurv/experiment.hpp"

using namespace mixsurv;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.model.lifetime = Marginal::exponential(1.0);
  c.model.censoring = Marginal::exponential(3.0 / 7.0);
  c.model.rho_x = 0.5;
  c.model.rho_y = 0.5;
  c.sizes = {50, 100, 200};
  c.reps = 8;
  c.grid_size = 128;
  c.statistics = {Statistic::sup_pl, Statistic::lil, Statistic::bahadur, Statistic::coupling};
  return c;
}

std::string csv_of(const RateSummary& s, bool raw) {
  std::ostringstream os;
  raw ? write_raw_csv(os, s) : write_summary_csv(os, s);
  return os.str();
}

}  // namespace

TEST_CASE("statistic names") {
  for (auto s : all_statistics()) CHECK(parse_statistic(to_string(s)) == s);
  try {
    parse_statistic("sup_foo");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("sup_foo") != std::string::npos);
    for (auto s : all_statistics()) CHECK(msg.find(to_string(s)) != std::string::npos);
  }
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.sizes = {100, 100};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.p0 = 0.9;
  c.p1 = 0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.reps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("single replication") {
  auto c = small_config();
  c.sizes = {100};
  c.reps = 1;
  c.statistics = {Statistic::sup_pl};
  const auto s = run_experiment(c);
  REQUIRE(s.summary.size() == 1);
  REQUIRE(s.raw.size() == 1);
  CHECK(s.summary[0].median == s.raw[0].value);
  CHECK(s.summary[0].q05 == s.raw[0].value);
  CHECK(s.summary[0].reps_valid == 1);
  CHECK(s.fits.empty());
}

TEST_CASE("experiments are deterministic and thread-count independent") {
  const auto c = small_config();
  const auto a = run_experiment(c, 1);
  const auto b = run_experiment(c, 1);
  const auto d = run_experiment(c, 3);
  CHECK(csv_of(a, true) == csv_of(b, true));
  CHECK(csv_of(a, false) == csv_of(b, false));
  CHECK(csv_of(a, false) == csv_of(d, false));
  CHECK(rates_json(a) == rates_json(d));
  CHECK(a.all_valid());
  CHECK(a.fits.size() == c.statistics.size());

  // summary survives a round trip through CSV
  std::istringstream in(csv_of(a, false));
  const auto back = read_summary_csv(in);
  REQUIRE(back.size() == a.summary.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].statistic == a.summary[i].statistic);
    CHECK(back[i].median == a.summary[i].median);
  }
  std::istringstream bad("statistic,n\n");
  CHECK_THROWS(read_summary_csv(bad));
}

TEST_CASE("rows with too many failed replications are invalid") {
  // Fhat reaches 0.99 only when the largest observation is an event, about
  // 70% of the time here, so bahadur fails in roughly 30% of replications.
  auto c = small_config();
  c.sizes = {20, 40, 80};
  c.reps = 40;
  c.p1 = 0.99;
  c.statistics = {Statistic::sup_pl, Statistic::bahadur};
  const auto s = run_experiment(c);
  const auto* row = s.find("bahadur", 40);
  REQUIRE(row != nullptr);
  CHECK(row->reps_valid < 36);
  CHECK_FALSE(row->valid);
  CHECK(std::isnan(row->median));
  CHECK(s.find("sup_pl", 40)->valid);
  CHECK_FALSE(s.all_valid());
  for (const auto& f : s.fits) CHECK(f.statistic != "bahadur");
}

TEST_CASE("KS distance rows") {
  auto c = small_config();
  c.sizes = {100, 200};
  c.reps = 20;
  c.limit_grid_size = 256;
  c.statistics = {Statistic::ksdist};
  const auto s = run_experiment(c);
  REQUIRE(s.summary.size() == 4);
  for (const auto& r : s.summary) {
    CHECK(r.valid);
    CHECK(r.median >= 0.0);
    CHECK(r.median <= 1.0);
  }
  CHECK(s.find("ksdist_quantile", 200) != nullptr);
}

TEST_CASE("parallel_for") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("configuration files") {
  const std::string text = R"({
    "model": {"lifetime": {"family": "weibull", "shape": 2, "scale": 1.5},
              "censoring": {"family": "uniform", "upper": 4},
              "rho_x": 0.3, "rho_y": 0.2},
    "experiment": {"sizes": [100, 400, 1600], "reps": 7, "seed": 9,
                   "statistics": ["sup_pl", "qdev"], "lambda": 2.0},
    "gp": {"grid_size": 129, "direct_stride": 4}
  })";
  const auto rc = parse_config(text);
  CHECK(rc.has_model);
  CHECK(rc.experiment.model.rho_x == 0.3);
  CHECK(rc.experiment.model.censoring.support_upper() == 4.0);
  CHECK(rc.experiment.sizes == std::vector<std::size_t>{100, 400, 1600});
  CHECK(rc.experiment.reps == 7);
  CHECK(rc.experiment.seed == 9);
  CHECK(rc.experiment.statistics == std::vector<Statistic>{Statistic::sup_pl, Statistic::qdev});
  CHECK(rc.gp.grid_size == 129);
  CHECK(rc.gp.direct_stride == 4);

  CHECK_FALSE(parse_config("{}").has_model);

  try {
    parse_config(R"({"experiment": {"sizez": [1]}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("experiment.sizez") != std::string::npos);
  }
  try {
    parse_config("{\n  \"experiment\": {\"reps\": }\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"experiment": {"statistics": ["nope"]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"lifetime": {"family": "gamma"}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"lifetime": {"family": "exponential", "rate": 1},
                                             "censoring": {"family": "exponential", "rate": 1},
                                             "rho_x": 1.5}})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
