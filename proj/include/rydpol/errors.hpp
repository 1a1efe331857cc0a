#pragma once

#include <stdexcept>
#include <string>

namespace rydpol {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration, missing inputs. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain an operation accepts (R <= 0, T <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-convergence, eigensolver breakdown, bad fits. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ChannelCoverageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& what, double where_bohr)
      : NumericError(what), location_bohr(where_bohr) {}
  double location_bohr;
};

class FitError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ResolutionError : public NumericError {
 public:
  ResolutionError(const std::string& what, double required_step_um)
      : NumericError(what), required_step_um(required_step_um) {}
  double required_step_um;
};

}  // namespace rydpol
