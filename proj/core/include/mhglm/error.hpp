#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mhglm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (dimensions, non-finite values, support).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Base class for failures of the numerical procedure on valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Iterative fit did not reach the score tolerance; carries the last iterate.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, int iterations)
      : NumericalError(what), last_iterate_(std::move(last_iterate)), iterations_(iterations) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  int iterations() const noexcept { return iterations_; }

 private:
  Eigen::VectorXd last_iterate_;
  int iterations_;
};

/// A plug-in precision matrix is numerically singular.
class DegeneratePrecision : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Dispersion is unknown and no group has residual degrees of freedom.
class DispersionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A Gram operator (Omega on R^p, or Omega2 on symmetric q x q matrices) is
/// numerically singular. `direction` spans the near-null space, expressed in
/// the coordinates of the operator's domain (R^p, or svec coordinates).
class SingularOperator : public NumericalError {
 public:
  SingularOperator(const std::string& what, Eigen::VectorXd direction, double condition)
      : NumericalError(what), direction_(std::move(direction)), condition_(condition) {}

  const Eigen::VectorXd& direction() const noexcept { return direction_; }
  /// Ratio of smallest to largest eigenvalue magnitude.
  double inverse_condition() const noexcept { return condition_; }

 private:
  Eigen::VectorXd direction_;
  double condition_;
};

}  // namespace mhglm
