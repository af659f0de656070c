#pragma once

#include <stdexcept>
#include <string>

namespace qavg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument value (sizes, discount, step exponent, temperature, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions do not match the model.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An object was queried before it holds enough data.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Singular or ill-conditioned linear algebra.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The random-scaling matrix is too close to singular to invert.
class DegeneracyError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// An iterative solver hit its iteration cap before reaching tolerance.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, double residual, long iterations)
      : NumericError(what + " (residual " + std::to_string(residual) + " after " +
                     std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const { return residual_; }
  long iterations() const { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

}  // namespace qavg
