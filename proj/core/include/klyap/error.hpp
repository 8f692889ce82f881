#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace klyap {

/// Broad failure class. The CLI maps each kind onto its exit code.
enum class ErrorKind {
  kValidation = 1,
  kNumeric = 2,
  kIo = 3,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for everything thrown by the library. `module` names the
/// pipeline stage that raised it ("expr", "collocation", ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string module, const std::string& message)
      : Error(ErrorKind::kValidation, std::move(module), message) {}
};

class NumericError : public Error {
 public:
  NumericError(std::string module, const std::string& message)
      : Error(ErrorKind::kNumeric, std::move(module), message) {}
};

class IoError : public Error {
 public:
  IoError(std::string module, const std::string& message)
      : Error(ErrorKind::kIo, std::move(module), message) {}
};

/// Syntax or name-resolution failure in an expression; `position` is a
/// zero-based character offset into the source text.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t position, const std::string& message);

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace klyap
