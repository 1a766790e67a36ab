#pragma once

#include <stdexcept>
#include <string>

namespace legged {

/// Mismatched sizes: SE_K(3) column counts, Jacobian blocks, slot indices.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. Log at angle pi).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A matrix that has to be inverted is not.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The optimizer's normal equations are rank deficient at the final linearization.
class UnderConstrainedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Graph topology does not allow the requested operation.
class StructureError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Measurement arrived out of order or refers to unknown entities.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed log, trajectory or config file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace legged
