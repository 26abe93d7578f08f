#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mixsurv {

enum class Continuity { right, left };

/// Piecewise-constant function with jumps at strictly increasing times.
/// Right-continuous functions take the value of the last jump <= t;
/// left-continuous ones (e.g. the at-risk proportion) the last jump < t.
/// Immutable after construction.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> jump_times, std::vector<double> values, double initial_value,
               Continuity continuity = Continuity::right);

  double operator()(double t) const noexcept;
  double left_limit(double t) const noexcept;
  double right_limit(double t) const noexcept;

  std::span<const double> jump_times() const noexcept { return jump_times_; }
  std::span<const double> values() const noexcept { return values_; }
  double initial_value() const noexcept { return initial_; }
  double final_value() const noexcept { return values_.empty() ? initial_ : values_.back(); }
  Continuity continuity() const noexcept { return continuity_; }
  std::size_t size() const noexcept { return jump_times_.size(); }
  bool empty() const noexcept { return jump_times_.empty(); }

 private:
  // value after the last jump strictly before / at-or-before t
  double before(double t) const noexcept;
  double at_or_before(double t) const noexcept;

  std::vector<double> jump_times_;
  std::vector<double> values_;
  double initial_ = 0.0;
  Continuity continuity_ = Continuity::right;
};

// CSV `t,value`, one row per jump.
void write_step_csv(std::ostream& os, const StepFunction& fn);

}  // namespace mixsurv
