#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tankfdi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error taxonomy. The CLI maps ValidationError to exit code 1 and
// NumericalError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnsupportedShape : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotObservable : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Returns (M + M^T) / 2.
inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace tankfdi
