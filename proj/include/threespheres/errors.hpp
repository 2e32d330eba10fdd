#pragma once

#include <stdexcept>
#include <string>

namespace threespheres {

// Argument outside the mathematical domain of an operation (t outside an
// annulus, p <= 1, x <= 1 for the g-functions, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid run or grid configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An affine normalization or capacity that is undefined for the given data.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// I(p) with both gradients zero and p < 2.
class SingularCaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace threespheres
