#pragma once

#include <stdexcept>
#include <string>

namespace hetbai {

// Base class for every domain failure raised by the library. The CLI maps
// these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Power iteration did not settle within its iteration budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// An episode hit its hard step cap before the stopping rule fired.
class StepCapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace hetbai
