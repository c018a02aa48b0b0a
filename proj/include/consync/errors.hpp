#pragma once

#include <stdexcept>
#include <string>

namespace consync {

// Malformed or out-of-range arguments, unreadable files, bad topologies.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The system model violates an assumption (e.g. (A, B) not stabilizable).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loss of definiteness, unstable closed loops, singular factorizations.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iteration hit its cap before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace consync
