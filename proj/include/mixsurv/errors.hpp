#pragma once

#include <stdexcept>
#include <string>

namespace mixsurv {

// |rho| >= 1 passed to an autoregressive generator.
class StationarityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Qn(p) requested for p above the largest value of the product-limit estimate.
class QuantileNotAttained : public std::runtime_error {
 public:
  QuantileNotAttained(double p, double sup_value)
      : std::runtime_error("quantile not attained: p=" + std::to_string(p) +
                           " exceeds sup Fhat=" + std::to_string(sup_value)),
        p_(p),
        sup_(sup_value) {}
  double p() const noexcept { return p_; }
  double sup_value() const noexcept { return sup_; }

 private:
  double p_;
  double sup_;
};

// Evaluation point outside the admissible range [0, tau].
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what + " (smallest eigenvalue " + std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

// Malformed configuration or input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mixsurv
