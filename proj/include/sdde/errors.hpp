#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sdde {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument left its admissible domain (time outside a trajectory, lag outside [0, r], ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what, double where = 0.0) : Error(what), where_(where) {}
  [[nodiscard]] double where() const noexcept { return where_; }

 private:
  double where_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// The delay dropped below SolveConfig::tau_min.
class VanishingDelayError : public Error {
 public:
  VanishingDelayError(const std::string& what, double time) : Error(what), time_(time) {}
  [[nodiscard]] double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The state became non-finite; last_good_time() is the end of the last accepted step.
class BlowupError : public Error {
 public:
  BlowupError(const std::string& what, double last_good_time) : Error(what), last_good_time_(last_good_time) {}
  [[nodiscard]] double last_good_time() const noexcept { return last_good_time_; }

 private:
  double last_good_time_;
};

/// The within-step fixed-point iteration did not converge; halving the step usually helps.
class StepError : public Error {
 public:
  StepError(const std::string& what, double time) : Error(what), time_(time) {}
  [[nodiscard]] double time() const noexcept { return time_; }

 private:
  double time_;
};

/// A hard precondition of a differentiability result does not hold (e.g. incompatible initial data).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// The sampling grid is too coarse to separate monotonicity changes of the lag function.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Gauss-Newton normal equations are (numerically) singular.
class RankError : public Error {
 public:
  RankError(const std::string& what, std::vector<double> singular_values)
      : Error(what), singular_values_(std::move(singular_values)) {}
  [[nodiscard]] const std::vector<double>& singular_values() const noexcept { return singular_values_; }

 private:
  std::vector<double> singular_values_;
};

/// Malformed run configuration. line() is 1-based, 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + field + ": " + what : field + ": " + what),
        field_(std::move(field)),
        line_(line) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

}  // namespace sdde
