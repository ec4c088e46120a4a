#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fcbnn {

// Invalid scalar arguments (non-finite values, non-positive epsilon, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operand or layer shapes that do not chain.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Structural invariant violated (non-sign weight, malformed truth table, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A closed form that is only defined for some problem sizes.
class UnsupportedSize : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Network shape does not match what an operation requires.
class ArchitectureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A construction would exceed its configured size limit.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A target function returned a non-finite value.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File parse failure; what() is prefixed with "line N: ".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fcbnn
