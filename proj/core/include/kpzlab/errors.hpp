#pragma once

#include <stdexcept>
#include <string>

namespace kpzlab {

/// Parameter outside the mathematical domain of a formula (e.g. supercritical coupling).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent or unusable configuration (grid too coarse, bad step, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A query that does not fit the object it is asked of (interval outside a path horizon).
class QueryError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Raised when a simulation leaves the regime where its observables are defined,
/// typically a nonpositive field value before taking a logarithm.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kpzlab
