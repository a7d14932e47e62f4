#pragma once

#include <stdexcept>
#include <string>

namespace edgeav {

/// Invalid configuration value. `field()` holds the dotted path of the
/// offending key, e.g. "scenario.dt".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// API called in a state that does not allow it (stepping a finished
/// episode, stale forward cache, empty batch).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Singular innovation covariance, non-finite Jacobian and similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bayes update where every state has zero prior x likelihood.
class DegenerateEvidenceError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Metric with an empty denominator (no runs, no ticks, no counts).
class UndefinedMetricError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Report requested for a (mode, weather) cell that has no episodes.
class MissingCellError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed model file or other persisted artifact.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace edgeav
