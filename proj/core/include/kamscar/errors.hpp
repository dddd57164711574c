#pragma once

#include <stdexcept>
#include <string>

namespace kamscar {

// Base for every error raised by the library. `module()` names the stage
// that failed so pipeline drivers can report it.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class OutOfBox : public Error {
 public:
  OutOfBox(const std::string& module, const std::string& what) : Error(module, what) {}
};

class DomainError : public Error {
 public:
  DomainError(const std::string& module, const std::string& what) : Error(module, what) {}
};

// Numeric failures (exit code 3 in the CLI).
class NumericError : public Error {
 public:
  using Error::Error;
};

class DivisorTooSmall : public NumericError {
 public:
  explicit DivisorTooSmall(const std::string& what) : NumericError("homological", what) {}
};

class InversionDiverged : public NumericError {
 public:
  explicit InversionDiverged(const std::string& what) : NumericError("normal_form", what) {}
};

class PhaseTooLarge : public NumericError {
 public:
  explicit PhaseTooLarge(const std::string& what) : NumericError("quasimode", what) {}
};

// Invariant violations (exit code 4 in the CLI).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class WindowsOverlap : public InvariantViolation {
 public:
  explicit WindowsOverlap(const std::string& what) : InvariantViolation("scar", what) {}
};

}  // namespace kamscar
