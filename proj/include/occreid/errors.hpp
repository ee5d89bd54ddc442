#pragma once

#include <stdexcept>
#include <string>

namespace occreid {

// Base of every error thrown by the library. `kind()` is a stable short tag
// used by the CLI to print machine-parsable failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

class ArgumentError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "argument"; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

class EvaluationSetupError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "eval_setup"; }
};

class TrainingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "training"; }
};

}  // namespace occreid
