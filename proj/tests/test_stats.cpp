#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "mixsurv/errors.hpp"
#include "mixsurv/stats.hpp"

using namespace mixsurv;
using Catch::Matchers::WithinAbs;

namespace {

CensoredSample make(std::vector<double> z, std::vector<std::uint8_t> d) {
  CensoredSample s;
  s.z = std::move(z);
  s.delta = std::move(d);
  return s;
}

TrueModel uniform_truth() {
  MixingModel m;
  m.lifetime = Marginal::uniform(4.0);
  m.censoring = Marginal::uniform(1e6);
  return TrueModel(m);
}

MixingModel reference_model(double rho) {
  MixingModel m;
  m.lifetime = Marginal::exponential(1.0);
  m.censoring = Marginal::exponential(3.0 / 7.0);
  m.rho_x = rho;
  m.rho_y = rho;
  return m;
}

double loglog(double n) { return std::log(std::log(n)); }

}  // namespace

TEST_CASE("sup norms") {
  ProcessPath zero{{0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}, 5, ProcessKind::pl};
  CHECK(sup_norm(zero) == 0.0);
  ProcessPath p{{0.0, 1.0, 2.0}, {1.0, -3.0, 2.0}, {1.0, 0.5, -2.5}, 5, ProcessKind::pl};
  CHECK(sup_norm(p) == 3.0);
  p.left_values[2] = -4.0;
  CHECK(sup_norm(p) == 4.0);
  CHECK(sup_norm(p, [](double t) { return t == 1.0 ? 2.0 : 0.0; }) == 6.0);
  CHECK_THROWS(sup_norm(ProcessPath{}));

  // sup over jump points and left limits matches a 10x finer brute-force grid
  const auto truth = TrueModel(reference_model(0.5));
  const auto range = admissible_range(truth);
  const auto sample = generate_sample(reference_model(0.5), 300, RandomStream{4, 0});
  const auto est = SampleEstimates::from(sample);
  const auto grid = sup_grid(est.fhat, range.tau, 512);
  const double coarse = sup_norm(pl_process(est.fhat, truth, grid, est.n, range));
  const auto fine_grid = uniform_grid(0.0, range.tau, 5120);
  const auto fine = pl_process(est.fhat, truth, fine_grid, est.n, range);
  double fine_sup = 0.0;
  for (double v : fine.values) fine_sup = std::max(fine_sup, std::abs(v));
  // between neighbouring points the smooth part moves by at most sqrt(n) f h
  const double tol = std::sqrt(300.0) * (range.tau / 511.0);
  CHECK(fine_sup <= coarse + 1e-12);
  CHECK(coarse <= fine_sup + tol);
}

TEST_CASE("rate normalizers") {
  for (double n = 20.0; n < 1e6; n *= 1.7) {
    CHECK(RateParams::a_n(n * 1.7) < RateParams::a_n(n));
    CHECK(RateParams::b_n(n * 1.7, 1.0) < RateParams::b_n(n, 1.0));
  }
  CHECK_THAT(RateParams::a_n(1000.0), WithinAbs(std::sqrt(loglog(1000.0) / 1000.0), 1e-16));
  CHECK_THAT(RateParams::b_n(1000.0, 2.0), WithinAbs(1.0 / (std::sqrt(1000.0) * std::pow(std::log(1000.0), 2.0)), 1e-16));
  RateParams r;
  r.window_constant = 3.0;
  CHECK_THAT(r.lambda_n(500.0), WithinAbs(3.0 * RateParams::b_n(500.0, 1.0), 1e-16));
}

TEST_CASE("law-of-the-iterated-logarithm statistic") {
  const auto truth = TrueModel(reference_model(0.5));
  const auto range = admissible_range(truth);
  const auto est = SampleEstimates::from(generate_sample(reference_model(0.5), 400, RandomStream{1, 2}));
  const double dev = sup_deviation(est, truth, Which::hazard, range);
  // a deviation of exactly a_n normalizes to 1
  CHECK_THAT(lil_stat(est, truth, Which::hazard, range) * RateParams::a_n(400.0), WithinAbs(dev, 1e-14));
  CHECK_THAT(lil_stat(est, truth, Which::pl, range),
             WithinAbs(sup_deviation(est, truth, Which::pl, range) / RateParams::a_n(400.0), 1e-12));
  const auto small = SampleEstimates::from(make({1, 2, 3}, {1, 1, 1}));
  CHECK_THROWS(lil_stat(small, truth, Which::hazard, range));
}

TEST_CASE("Bahadur-type statistic") {
  const auto f = km(make({1, 2, 3}, {1, 1, 1}));
  const std::vector<double> half{0.5};
  CHECK_THAT(bahadur_stat(f, half), WithinAbs(1.0 / 6.0, 1e-15));
  const std::vector<double> at_jumps{1.0 / 3.0, 2.0 / 3.0};
  CHECK(bahadur_stat(f, at_jumps) < 1e-15);

  const auto p_grid = uniform_grid(0.1, 0.9, 200);
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto est = SampleEstimates::from(generate_sample(reference_model(0.5), 500, RandomStream{9, r}));
    const double lo = pl_quantile(est.fhat, 0.1);
    const double hi = pl_quantile(est.fhat, 0.9);
    CHECK(bahadur_stat(est.fhat, p_grid) <= max_jump(est.fhat, lo, hi));
  }
  const auto capped = km(make({1, 2, 3}, {1, 1, 0}));
  const std::vector<double> high{0.9};
  CHECK_THROWS_AS(bahadur_stat(capped, high), QuantileNotAttained);
}

TEST_CASE("quantile deviation statistic") {
  const auto truth = uniform_truth();
  // Fhat with jumps exactly at Q(p) for the grid points gives Qn = Q
  std::vector<double> times, ps;
  for (int i = 1; i <= 19; ++i) {
    ps.push_back(0.05 * i);
    times.push_back(truth.Q(0.05 * i));
  }
  const StepFunction exact(times, ps, 0.0);
  CHECK(qdev_stat(exact, 100, truth, ps) < 1e-12);
  // shifting every jump by sqrt(log log n / n) normalizes to 1
  const double shift = std::sqrt(loglog(100.0) / 100.0);
  std::vector<double> shifted = times;
  for (double& t : shifted) t += shift;
  CHECK_THAT(qdev_stat(StepFunction(shifted, ps, 0.0), 100, truth, ps), WithinAbs(1.0, 1e-12));
  CHECK_THROWS(qdev_stat(exact, 5, truth, ps));
  CHECK(coupling_stat(exact, 100, truth, ps) < 1e-12);
}

TEST_CASE("window oscillation") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> t(256), v(256);
    for (auto& x : t) x = u(rng);
    std::sort(t.begin(), t.end());
    for (auto& x : v) x = g(rng);
    for (double w : {0.0, 0.001, 0.02, 0.2, 0.9}) {
      CHECK(window_oscillation(t, v, w) == window_oscillation_brute(t, v, w));
    }
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    CHECK(window_oscillation(t, v, 2.0) == *mx - *mn);
  }
  const auto truth = TrueModel(reference_model(0.5));
  const auto range = admissible_range(truth);
  const auto est = SampleEstimates::from(generate_sample(reference_model(0.5), 300, RandomStream{2, 2}));
  CHECK(oscillation_stat(est, truth, 0.0, range) == 0.0);
  const auto path = pl_process(est.fhat, truth, sup_grid(est.fhat, range.tau), est.n, range);
  double mx = -1e300, mn = 1e300;
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    mx = std::max({mx, path.values[i], path.left_values[i]});
    mn = std::min({mn, path.values[i], path.left_values[i]});
  }
  CHECK(oscillation_stat(est, truth, 2.0 * range.tau, range) == mx - mn);
}

TEST_CASE("second-order remainder") {
  // uncensored n = 3 against Uniform(0, 4), brute force on a very fine grid
  const auto truth = uniform_truth();
  const auto range = admissible_range(truth);
  const auto est = SampleEstimates::from(make({1, 2, 3}, {1, 1, 1}));
  double brute = 0.0;
  const std::size_t m = 1000000;
  for (std::size_t i = 0; i <= m; ++i) {
    const double t = range.tau * static_cast<double>(i) / static_cast<double>(m);
    // hand-written estimates: Fhat = #{z <= t}/3, Lhat = sum of 1/(3 - j) over events <= t
    const int k = t >= 3.0 ? 3 : t >= 2.0 ? 2 : t >= 1.0 ? 1 : 0;
    const double fh = k / 3.0;
    const double lh = (k >= 1 ? 1.0 / 3.0 : 0.0) + (k >= 2 ? 0.5 : 0.0) + (k >= 3 ? 1.0 : 0.0);
    const double ft = t / 4.0;
    brute = std::max(brute, std::abs((fh - ft) - (1.0 - ft) * (lh + std::log1p(-ft))));
  }
  CHECK_THAT(second_order_remainder(est, truth, range, 100001), WithinAbs(brute, 1e-4));
  CHECK_THROWS(remainder_stat(est, truth, range));

  // the remainder shrinks faster than the deviation itself
  const auto ref = TrueModel(reference_model(0.5));
  const auto rr = admissible_range(ref);
  auto ratio = [&](std::size_t n) {
    std::vector<double> r;
    for (std::uint64_t k = 0; k < 40; ++k) {
      const auto e = SampleEstimates::from(generate_sample(reference_model(0.5), n, RandomStream{6, k}));
      r.push_back(second_order_remainder(e, ref, rr) / sup_deviation(e, ref, Which::pl, rr));
    }
    return sample_quantile(r, 0.5);
  };
  CHECK(ratio(4000) < ratio(250));
}

TEST_CASE("two-sample KS distance") {
  const std::vector<double> a{0.3, 1.0, 2.0};
  CHECK(ks_distance(a, a) == 0.0);
  CHECK(ks_distance(std::vector<double>{0.0}, std::vector<double>{1.0}) == 1.0);
  CHECK_THAT(ks_distance(std::vector<double>{1, 2, 3, 4}, std::vector<double>{3, 4, 5, 6}), WithinAbs(0.5, 1e-15));
  // ties across samples are handled at the shared value
  CHECK_THAT(ks_distance(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 2}), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THROWS(ks_distance(std::vector<double>{}, a));

  std::mt19937_64 rng(123);
  std::normal_distribution<double> g;
  int below = 0;
  for (int meta = 0; meta < 200; ++meta) {
    std::vector<double> x(1000), y(1000);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    if (ks_distance(x, y) < 1.628 * std::sqrt(2.0 / 1000.0)) ++below;
  }
  CHECK(below >= 190);
}

TEST_CASE("rate fitting") {
  const std::vector<double> sizes{250, 1000, 4000, 16000};
  std::vector<double> med;
  for (double n : sizes) med.push_back(2.5 / std::sqrt(n));
  const auto fit = fit_rate(sizes, med);
  CHECK_THAT(fit.slope, WithinAbs(-0.5, 1e-12));
  CHECK_THAT(fit.intercept, WithinAbs(std::log(2.5), 1e-12));
  CHECK(fit.std_error < 1e-12);
  CHECK(fit.points == 4);
  const std::vector<double> flat{0.3, 0.3, 0.3, 0.3};
  CHECK_THAT(fit_rate(sizes, flat).slope, WithinAbs(0.0, 1e-14));
  const std::vector<double> with_zero{0.0, med[1], med[2], med[3]};
  CHECK(fit_rate(sizes, with_zero).points == 3);
  CHECK_THROWS(fit_rate(std::vector<double>{1, 2}, std::vector<double>{1, 2}));

  CHECK(sample_quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK_THAT(sample_quantile({4, 1, 3, 2, 5}, 0.05), WithinAbs(1.2, 1e-15));
}
