#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "mixsurv/estimators.hpp"
#include "mixsurv/limit.hpp"
#include "mixsurv/stats.hpp"

using namespace mixsurv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MixingModel exp_model(double lambda, double mu, double rho) {
  MixingModel m;
  m.lifetime = Marginal::exponential(lambda);
  m.censoring = Marginal::exponential(mu);
  m.rho_x = rho;
  m.rho_y = rho;
  return m;
}

// Cov B(s), B(t) for iid Exp(lambda) lifetimes and Exp(mu) censoring, s <= t:
// lambda^2 [ int_0^s int_0^t e^{c min(x,y)} dy dx - s t ], c = lambda + mu.
double iid_exp_bcov(double lambda, double mu, double s, double t) {
  if (s > t) std::swap(s, t);
  const double c = lambda + mu;
  const double es = std::exp(c * s);
  const double inner = 2.0 * (es - 1.0) / (c * c) + ((t - s) * es - t - s) / c;
  return lambda * lambda * (inner - s * t);
}

struct Moments {
  double mean_product = 0.0;
  double se = 0.0;
};

Moments product_moment(const std::vector<GaussianPath>& paths, std::size_t i, std::size_t j) {
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& p : paths) {
    const double v = p.values[i] * p.values[j];
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(paths.size());
  const double mean = sum / n;
  return {mean, std::sqrt((sum_sq / n - mean * mean) / n)};
}

}  // namespace

TEST_CASE("b_cov against the iid closed form") {
  const auto model = exp_model(1.0, 3.0 / 7.0, 0.0);
  const TrueModel truth(model);
  const GammaKernel kernel(model);
  CHECK(b_cov(0.0, 1.0, 1.0, 1.0, kernel, truth) == 0.0);
  CHECK(b_cov(1.0, 1.0, 0.0, 1.0, kernel, truth) == 0.0);
  for (auto [s, t] : {std::pair{0.3, 0.3}, {0.877, 0.877}, {0.5, 1.7}, {2.0, 1.1}, {2.09, 2.09}}) {
    CHECK_THAT(b_cov(s, 1.0, t, 1.0, kernel, truth), WithinRel(iid_exp_bcov(1.0, 3.0 / 7.0, s, t), 1e-6));
  }
  const auto other = exp_model(2.0, 0.5, 0.0);
  const TrueModel t2(other);
  const GammaKernel k2(other);
  CHECK_THAT(b_cov(0.4, 3.0, 0.9, 3.0, k2, t2), WithinRel(iid_exp_bcov(2.0, 0.5, 0.4, 0.9), 1e-6));
  // level prefactor min(m, n) / sqrt(m n), symmetric in the levels
  const double base = b_cov(0.5, 1.0, 1.0, 1.0, kernel, truth);
  CHECK_THAT(b_cov(0.5, 1.0, 1.0, 4.0, kernel, truth), WithinRel(0.5 * base, 1e-12));
  CHECK_THAT(b_cov(0.5, 4.0, 1.0, 1.0, kernel, truth), WithinRel(0.5 * base, 1e-12));
  CHECK_THROWS(b_cov(truth.tau(1e-300) + 1e9, 1.0, 1.0, 1.0, kernel, truth));
}

TEST_CASE("b_cov_matrix agrees with pointwise b_cov under mixing") {
  const auto model = exp_model(1.0, 3.0 / 7.0, 0.5);
  const TrueModel truth(model);
  const GammaKernel kernel(model);
  const std::vector<double> grid{0.0, 0.3, 0.8, 1.4, 2.0};
  const auto cov = b_cov_matrix(grid, kernel, truth);
  CHECK(cov(0, 0) == 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) > 0.0);
    for (std::size_t j = 1; j < grid.size(); ++j) {
      CHECK_THAT(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                 WithinRel(b_cov(grid[i], 1.0, grid[j], 1.0, kernel, truth), 1e-6));
    }
  }
}

TEST_CASE("PSD repair") {
  Eigen::MatrixXd m(3, 3);
  m << 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0;
  auto f = psd_factor(m);
  CHECK((f.root * f.root.transpose() - m).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(f.repair == Catch::Approx(1e-10));

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 1.2, 1.2, 1.0;  // eigenvalues 2.2 and -0.2
  f = psd_factor(bad);
  CHECK_THAT(f.min_eigenvalue, WithinAbs(-0.2, 1e-12));
  CHECK_THAT(f.repair, WithinAbs(0.2 + 1e-10, 1e-12));
  const Eigen::MatrixXd rebuilt = f.root * f.root.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rebuilt);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK((rebuilt - bad).norm() <= f.repair * std::sqrt(2.0) + 1e-12);
}

TEST_CASE("Kiefer sampler moments") {
  const auto model = exp_model(1.0, 3.0 / 7.0, 0.5);
  const TrueModel truth(model);
  const GammaKernel kernel(model);
  const auto grid = uniform_grid(0.0, truth.tau(0.05), 64);
  const KieferSampler sampler(grid, kernel);
  std::mt19937_64 rng(5);
  const auto zero = sampler.draw(0.0, rng);
  for (double v : zero.values) CHECK(v == 0.0);

  std::vector<GaussianPath> draws, draws4;
  std::vector<GaussianPath> lower, increments;
  for (int i = 0; i < 5000; ++i) {
    draws.push_back(sampler.draw(10.0, rng));
    draws4.push_back(sampler.draw(40.0, rng));
    const std::vector<double> levels{10.0, 30.0};
    const auto nested = sampler.draw_nested(levels, rng);
    lower.push_back(nested[0]);
    GaussianPath inc = nested[1];
    for (std::size_t j = 0; j < inc.values.size(); ++j) inc.values[j] -= nested[0].values[j];
    increments.push_back(inc);
  }
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{20, 20}, {20, 45}, {10, 60}}) {
    const auto m = product_moment(draws, i, j);
    CHECK(std::abs(m.mean_product - 10.0 * kernel(grid[i], grid[j])) < 5.0 * m.se);
    const auto m4 = product_moment(draws4, i, j);
    CHECK(std::abs(m4.mean_product - 40.0 * kernel(grid[i], grid[j])) < 5.0 * m4.se);
  }
  // nested increments are uncorrelated with the lower level
  std::vector<GaussianPath> mixed;
  for (std::size_t r = 0; r < lower.size(); ++r) {
    GaussianPath p = lower[r];
    p.values[45] = increments[r].values[45];
    mixed.push_back(p);
  }
  const auto cross = product_moment(mixed, 20, 45);
  CHECK(std::abs(cross.mean_product) < 5.0 * cross.se);
  const auto inc_var = product_moment(increments, 45, 45);
  CHECK(std::abs(inc_var.mean_product - 20.0 * kernel(grid[45], grid[45])) < 5.0 * inc_var.se);

  std::vector<double> too_big(2049);
  for (std::size_t i = 0; i < too_big.size(); ++i) too_big[i] = 0.001 * static_cast<double>(i);
  CHECK_THROWS(KieferSampler(too_big, kernel));
}

TEST_CASE("B from Kiefer paths") {
  const auto model = exp_model(1.0, 3.0 / 7.0, 0.5);
  const TrueModel truth(model);
  const GammaKernel kernel(model);
  const double tau = truth.tau(0.05);
  const auto grid = uniform_grid(0.0, tau, 257);
  const KieferSampler sampler(grid, kernel);

  GaussianPath flat{grid, std::vector<double>(grid.size(), 0.0), 100.0, PathMethod::kiefer};
  for (double v : sample_b_integral(flat, 100.0, truth).values) CHECK(v == 0.0);
  const std::vector<double> short_grid(grid.begin(), grid.begin() + 100);
  CHECK_THROWS(sample_b_integral(GaussianPath{short_grid, std::vector<double>(100, 0.0), 1.0, PathMethod::kiefer},
                                 1.0, truth));

  std::vector<GaussianPath> draws;
  for (std::size_t i = 0; i < 3000; ++i) {
    auto rng = RandomStream{77, i}.engine(Substream::kiefer);
    draws.push_back(sample_b_integral(sampler.draw(1000.0, rng), 1000.0, truth));
    CHECK(draws.back().values[0] == 0.0);
  }
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{64, 64}, {64, 200}, {128, 256}, {256, 256}}) {
    const auto m = product_moment(draws, i, j);
    const double target = b_cov(grid[i], 1000.0, grid[j], 1000.0, kernel, truth);
    CHECK(std::abs(m.mean_product - target) < 5.0 * m.se + 1e-4 * std::abs(target));
  }

  // the level cancels: the same normals at two levels give the same B
  auto r1 = RandomStream{3, 0}.engine(Substream::kiefer);
  auto r2 = RandomStream{3, 0}.engine(Substream::kiefer);
  const auto b1 = sample_b_integral(sampler.draw(250.0, r1), 250.0, truth);
  const auto b2 = sample_b_integral(sampler.draw(4000.0, r2), 4000.0, truth);
  for (std::size_t j = 0; j < grid.size(); ++j) CHECK_THAT(b1.values[j], WithinAbs(b2.values[j], 1e-10));
}

TEST_CASE("direct B sampler") {
  const auto model = exp_model(1.0, 3.0 / 7.0, 0.5);
  const TrueModel truth(model);
  const GammaKernel kernel(model);
  const auto fine = uniform_grid(0.0, truth.tau(0.05), 257);
  std::vector<double> coarse;
  for (std::size_t i = 0; i < fine.size(); i += 8) coarse.push_back(fine[i]);
  const DirectBSampler direct(coarse, kernel, truth);
  const Eigen::MatrixXd rebuilt = direct.factor().root * direct.factor().root.transpose();
  for (Eigen::Index i = 0; i < rebuilt.rows(); ++i) {
    CHECK_THAT(rebuilt(i, i), WithinAbs(direct.covariance()(i, i), 1e-9 + 1e-12 * direct.covariance()(i, i)));
  }
  const auto a = sample_b_direct(coarse, 10.0, kernel, truth, RandomStream{8, 1});
  const auto b = sample_b_direct(coarse, 10.0, kernel, truth, RandomStream{8, 1});
  CHECK(a.values == b.values);
  auto rng0 = RandomStream{8, 1}.engine(Substream::limit);
  for (double v : direct.draw(0.0, rng0).values) CHECK(v == 0.0);

  // sup |B| laws agree between the two methods on the shared points
  const KieferSampler kiefer(fine, kernel);
  std::vector<double> sup_integral, sup_direct;
  for (std::size_t i = 0; i < 2000; ++i) {
    auto rk = RandomStream{21, i}.engine(Substream::kiefer);
    const auto bi = sample_b_integral(kiefer.draw(500.0, rk), 500.0, truth);
    double s = 0.0;
    for (std::size_t j = 0; j < fine.size(); j += 8) s = std::max(s, std::abs(bi.values[j]));
    sup_integral.push_back(s);
    auto rd = RandomStream{21, i}.engine(Substream::limit);
    const auto bd = direct.draw(500.0, rd);
    double sd = 0.0;
    for (double v : bd.values) sd = std::max(sd, std::abs(v));
    sup_direct.push_back(sd);
  }
  CHECK(ks_distance(sup_integral, sup_direct) < 0.05);

  std::ostringstream os;
  write_gaussian_path_csv(os, a);
  CHECK(os.str().rfind("grid,value\n0,0\n", 0) == 0);
}
