#pragma once

#include <stdexcept>
#include <string>

namespace gdse {

// Failures caused by the caller: bad arguments, bad files, bad configs.
// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failures discovered while computing on valid input. Exit code 3.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

class DomainTagError : public InputError {
 public:
  using InputError::InputError;
};

class IndexError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  ConfigError(std::string field, const std::string& what)
      : InputError(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

class CheckpointError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class CorruptCheckpointError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class VersionMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class NumericalError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class ContractViolation : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace gdse
