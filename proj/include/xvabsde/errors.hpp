#pragma once

#include <stdexcept>
#include <string>

namespace xvabsde {

// Regression matrix is numerically rank deficient.
class IllConditionedError : public std::runtime_error {
  public:
    explicit IllConditionedError(const std::string& what) : std::runtime_error(what) {}
};

// A simulated state or weight became NaN/Inf.
class NonFiniteError : public std::runtime_error {
  public:
    explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

// Diffusion matrix is not invertible where an inverse is required.
class SingularDiffusionError : public std::runtime_error {
  public:
    explicit SingularDiffusionError(const std::string& what) : std::runtime_error(what) {}
};

// An API precondition that cannot be expressed as an argument check was violated.
class ContractViolation : public std::logic_error {
  public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Fixed-point iteration of the implicit scheme failed to converge.
class NoConvergenceError : public std::runtime_error {
  public:
    explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace xvabsde
