#pragma once

#include <stdexcept>
#include <string>

namespace coexist {

/// Base of every error raised by the library. `exit_code()` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual int exit_code() const noexcept { return 4; }
};

// Validation family: exit code 2.
class ValidationError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class RangeError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class ParameterError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class OrderingError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class FormatError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InfeasibleError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// Numerical / model-validity family: exit code 4.
class ModelValidityError : public Error {
public:
  using Error::Error;
};

class UndefinedVisibilityError : public Error {
public:
  using Error::Error;
};

class InvariantError : public Error {
public:
  using Error::Error;
};

class DegenerateDataError : public Error {
public:
  using Error::Error;
};

class EstimationError : public Error {
public:
  using Error::Error;
};

}  // namespace coexist
