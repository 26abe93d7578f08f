#include "mixsurv/step_function.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace mixsurv {

StepFunction::StepFunction(std::vector<double> jump_times, std::vector<double> values, double initial_value,
                           Continuity continuity)
    : jump_times_(std::move(jump_times)),
      values_(std::move(values)),
      initial_(initial_value),
      continuity_(continuity) {
  if (jump_times_.size() != values_.size()) {
    throw std::invalid_argument("step function: jump_times and values differ in length");
  }
  for (std::size_t i = 1; i < jump_times_.size(); ++i) {
    if (!(jump_times_[i] > jump_times_[i - 1])) {
      throw std::invalid_argument("step function: jump times must be strictly increasing");
    }
  }
}

double StepFunction::before(double t) const noexcept {
  const auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double StepFunction::at_or_before(double t) const noexcept {
  const auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double StepFunction::operator()(double t) const noexcept {
  return continuity_ == Continuity::right ? at_or_before(t) : before(t);
}

double StepFunction::left_limit(double t) const noexcept { return before(t); }

double StepFunction::right_limit(double t) const noexcept { return at_or_before(t); }

void write_step_csv(std::ostream& os, const StepFunction& fn) {
  os << "t,value\n";
  char buf[80];
  for (std::size_t i = 0; i < fn.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", fn.jump_times()[i], fn.values()[i]);
    os << buf;
  }
}

}  // namespace mixsurv
