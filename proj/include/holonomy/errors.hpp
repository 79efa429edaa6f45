#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace holonomy {

// Bad configuration or a request the model cannot serve.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Input violates a documented precondition (e.g. non-unitary matrix).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Point or loop touches a spectral degeneracy set.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContinuationError : public std::runtime_error {
 public:
  ContinuationError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace holonomy
