#pragma once

#include <stdexcept>
#include <string>

namespace depin {

/// A parameter or input violated a documented precondition. `field()` names
/// the offending parameter so the CLI can report it.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Non-finite values or a broken numerical invariant during a computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A probe or bisection ran out of its iteration/time budget.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const char* field, const std::string& message) {
  if (!condition) throw ValidationError(field, message);
}

}  // namespace depin
