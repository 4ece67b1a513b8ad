#pragma once

#include <stdexcept>
#include <string>

namespace ccdm {

/// Malformed input: bad dimensions, out-of-range indices, non-finite values,
/// unreadable files. The CLI maps it to exit code 2.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iteration or time budget ran out before the requested accuracy was
/// certified. Carries the best objective value seen. CLI exit code 3.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(const std::string& what, double best_value)
      : std::runtime_error(what), best_value_(best_value) {}
  double best_value() const noexcept { return best_value_; }

 private:
  double best_value_;
};

}  // namespace ccdm
