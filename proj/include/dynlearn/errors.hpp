#pragma once

#include <stdexcept>
#include <string>

namespace dynlearn {

// Bad arguments, shapes, or configuration values.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or state blow-up; carries the step where it happened
// (-1 when no step applies).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, long step = -1)
      : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dynlearn
