#pragma once

#include <stdexcept>
#include <string>

namespace laasim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid case failed validation or references unknown buses.
class CaseError : public Error {
 public:
  using Error::Error;
};

/// Matrix model cannot be built (singular inertia, singular load block, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// An argument violates an operation precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Scenario / controller / attack configuration is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a usage contract (e.g. time running backwards).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Numerical integration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace laasim
