#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "mixsurv/estimators.hpp"
#include "mixsurv/kernel.hpp"

using namespace mixsurv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

MixingModel exp_model(double censor_rate, double rho_x, double rho_y) {
  MixingModel m;
  m.lifetime = Marginal::exponential(1.0);
  m.censoring = Marginal::exponential(censor_rate);
  m.rho_x = rho_x;
  m.rho_y = rho_y;
  return m;
}

// Long-run variance of n^{-1/2} sum g_i(s) by batch means over independent series.
double batch_means_lrv(const MixingModel& model, double s, std::size_t series, std::size_t length,
                       std::size_t batch) {
  const double h = TrueModel(model).H(s);
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < series; ++r) {
    const auto sample = generate_sample(model, length, RandomStream{4242, r});
    for (std::size_t b = 0; b + batch <= length; b += batch) {
      double acc = 0.0;
      for (std::size_t i = b; i < b + batch; ++i) acc += (sample.z[i] <= s ? 1.0 : 0.0) - h;
      sum_sq += acc * acc / static_cast<double>(batch);
      ++count;
    }
  }
  return sum_sq / static_cast<double>(count);
}

}  // namespace

TEST_CASE("lag covariances") {
  const auto iid = exp_model(1.0, 0.0, 0.0);
  const TrueModel t(iid);
  for (double s : {0.2, 0.7, 1.5}) {
    CHECK_THAT(cov_g1gk(s, s, 1, iid), WithinAbs(t.H(s) * (1.0 - t.H(s)), 1e-15));
    CHECK_THAT(cov_g1gk(s, 2.0 * s, 3, iid), WithinAbs(0.0, 1e-15));
  }
  CHECK_THAT(cov_g1gk(0.3, 0.9, 1, iid), WithinAbs(t.H(0.3) - t.H(0.3) * t.H(0.9), 1e-15));
}

TEST_CASE("lag-2 covariance matches a direct Monte Carlo of pairs") {
  const auto model = exp_model(1.0, 0.5, 0.0);
  const TrueModel truth(model);
  const double s = truth.H_quantile(0.5);
  std::mt19937_64 rng(31337);
  std::normal_distribution<double> normal;
  const double c = std::sqrt(1.0 - 0.25);
  const std::size_t pairs = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double e1 = normal(rng);
    const double e2 = 0.5 * e1 + c * normal(rng);
    const double x1 = -std::log(upper_tail(e1));  // Exp(1) quantile of Phi(e)
    const double x2 = -std::log(upper_tail(e2));
    const double y1 = -std::log(upper_tail(normal(rng)));
    const double y2 = -std::log(upper_tail(normal(rng)));
    const double g1 = (std::min(x1, y1) <= s ? 1.0 : 0.0) - 0.5;
    const double g2 = (std::min(x2, y2) <= s ? 1.0 : 0.0) - 0.5;
    sum += g1 * g2;
    sum_sq += g1 * g1 * g2 * g2;
  }
  const double n = static_cast<double>(pairs);
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(cov_g1gk(s, s, 2, model) - mean) < 3.0 * se);
}

TEST_CASE("Gamma reduces to the Bernoulli covariance for iid data") {
  const auto iid = exp_model(3.0 / 7.0, 0.0, 0.0);
  const TrueModel t(iid);
  const GammaKernel k(iid);
  CHECK(k.k_max() == 1);
  const auto grid = uniform_grid(0.0, t.tau(0.05), 32);
  double worst = 0.0;
  for (double s : grid) {
    for (double u : grid) worst = std::max(worst, std::abs(k(s, u) - (t.H(std::min(s, u)) - t.H(s) * t.H(u))));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("Gamma under mixing") {
  const auto model = exp_model(3.0 / 7.0, 0.5, 0.5);
  const TrueModel t(model);
  const GammaKernel k(model);
  CHECK(k.tail_bound() < 1e-8);
  CHECK(k.k_max() > 1);
  const auto grid = uniform_grid(0.05, t.tau(0.05), 12);
  for (double s : grid) {
    for (double u : grid) {
      CHECK(k(s, u) == k(u, s));
      CHECK(std::abs(k.truncated(s, u, k.k_max()) - k.truncated(s, u, k.k_max() + 10)) <= k.tail_bound());
    }
  }
  const auto table = k.tabulate(grid);
  CHECK(table.values(3, 7) == k(grid[3], grid[7]));
  CHECK(table.tail_bound == k.tail_bound());

  std::ostringstream os;
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  const std::vector<double> g2{0.5, 1.0};
  write_matrix_csv(os, g2, m);
  CHECK(os.str() == "0.5,1\n1,2\n3,4\n");
}

TEST_CASE("Gamma matches a batch-means long-run variance") {
  const auto model = exp_model(1.0, 0.5, 0.5);
  const TrueModel t(model);
  const GammaKernel k(model);
  const double s = t.H_quantile(0.5);
  const double oracle = batch_means_lrv(model, s, 200, 10000, 200);
  CHECK_THAT(k(s, s), WithinRel(oracle, 0.05));
}
