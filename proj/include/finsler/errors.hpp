#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed documents, unsupported options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatches: odd real dimension where a complex structure is needed,
/// incompatible jet layouts, wrong vector sizes.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Evaluation outside the validity domain of a metric, or below the slit guard.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Singular fundamental tensor / Levi matrix, or a dependent flag.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class IntegratorError : public Error {
 public:
  using Error::Error;
};

/// A theorem's hypothesis fails on the supplied data (e.g. target curvature not negative).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// Boundary-value solve for a connecting geodesic did not converge.
class ShootingError : public Error {
 public:
  ShootingError(const std::string& what, double best_residual, double upper_bound)
      : Error(what), best_residual_(best_residual), upper_bound_(upper_bound) {}

  double best_residual() const { return best_residual_; }
  /// Length of the best discrete competitor path; an upper bound for the distance.
  double upper_bound() const { return upper_bound_; }

 private:
  double best_residual_;
  double upper_bound_;
};

}  // namespace finsler
