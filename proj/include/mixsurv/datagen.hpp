#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mixsurv/marginal.hpp"
#include "mixsurv/random.hpp"

namespace mixsurv {

/// Gaussian-copula AR(1) censoring model. Lifetimes X_i = Q_F(Phi(e_i)) and
/// censoring times Y_i = Q_G(Phi(u_i)) with e, u independent stationary AR(1)
/// chains of lag-one correlation rho_x, rho_y. rho = 0 gives iid data.
struct MixingModel {
  Marginal lifetime = Marginal::exponential(1.0);
  Marginal censoring = Marginal::exponential(1.0);
  double rho_x = 0.0;
  double rho_y = 0.0;

  void validate() const;
  bool iid() const noexcept { return rho_x == 0.0 && rho_y == 0.0; }
};

struct CensoredSample {
  std::vector<double> z;
  std::vector<std::uint8_t> delta;
  // Latent lifetimes and censoring times, kept only when requested.
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const noexcept { return z.size(); }
  bool has_latent() const noexcept { return !x.empty(); }
  double censoring_proportion() const noexcept;
  void validate() const;
};

std::vector<double> ar1_gaussian(std::size_t n, double rho, std::mt19937_64& rng);
std::vector<double> ar1_gaussian(std::size_t n, double rho, const RandomStream& stream);

// v_i = Q(Phi(g_i)), using the upper tail for g_i > 0 so Exp/Weibull stay finite.
std::vector<double> to_marginal(std::span<const double> gauss, const Marginal& marginal);

CensoredSample generate_sample(const MixingModel& model, std::size_t n, const RandomStream& stream,
                               bool keep_latent = false);

/// Closed-form ground truth for a MixingModel.
class TrueModel {
 public:
  explicit TrueModel(MixingModel model);

  const MixingModel& model() const noexcept { return model_; }

  double F(double t) const noexcept { return model_.lifetime.cdf(t); }
  double G(double t) const noexcept { return model_.censoring.cdf(t); }
  double f(double t) const noexcept { return model_.lifetime.pdf(t); }
  double Hbar(double t) const noexcept { return model_.lifetime.sf(t) * model_.censoring.sf(t); }
  double H(double t) const noexcept { return 1.0 - Hbar(t); }
  double Lambda(double t) const noexcept { return model_.lifetime.cumulative_hazard(t); }
  double Q(double p) const { return model_.lifetime.quantile(p); }
  double hazard(double t) const noexcept;
  // Density of the uncensored sub-distribution: (1 - G) f.
  double fstar_density(double t) const noexcept { return model_.censoring.sf(t) * f(t); }

  // F*(t) = P(Z <= t, delta = 1); t may be +inf.
  double Fstar(double t) const;
  // G*(t) = P(Z <= t, delta = 0).
  double Gstar(double t) const;

  // Smallest t with Hbar(t) <= epsilon.
  double tau(double epsilon) const;
  // Quantile of H, the law of Z.
  double H_quantile(double p) const;

 private:
  MixingModel model_;
  bool closed_form_fstar_;
};

TrueModel true_model(const MixingModel& model);

// CSV with header `z,delta`, generation order.
void write_sample_csv(std::ostream& os, const CensoredSample& sample);
CensoredSample read_sample_csv(std::istream& is);

}  // namespace mixsurv
