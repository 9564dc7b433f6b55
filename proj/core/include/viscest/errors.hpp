#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace viscest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wall discretisation too coarse: eigenvalues disagree under refinement.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// More modes were requested than the discretisation can supply.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Noise amplitudes violate B = sum b_j^2 > 0.
class StandingAssumptionError : public Error {
 public:
  using Error::Error;
};

/// Mismatched lengths or out-of-range arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A quantity defined only for t > 0 (or Q_t > 0) was requested too early.
class UndefinedEstimatorError : public Error {
 public:
  using Error::Error;
};

/// Not enough simulated data for the requested statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Trajectory blew up (non-finite values or |u_j| above the abort threshold).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time, double max_abs)
      : Error(what), time_(time), max_abs_(max_abs) {}

  double time() const noexcept { return time_; }
  double max_abs() const noexcept { return max_abs_; }

 private:
  double time_;
  double max_abs_;
};

/// delta-method reciprocal of a zero sample.
class ReciprocalError : public Error {
 public:
  ReciprocalError(const std::string& what, std::vector<std::size_t> indices)
      : Error(what), indices_(std::move(indices)) {}

  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

/// Malformed or inconsistent persisted file (cache, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace viscest
