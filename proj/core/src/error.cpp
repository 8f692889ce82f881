#include "klyap/error.hpp"

#include <utility>

namespace klyap {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
      return "validation";
    case ErrorKind::kNumeric:
      return "numeric";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string module, const std::string& message)
    : std::runtime_error("[" + module + "] " + message),
      kind_(kind),
      module_(std::move(module)) {}

ParseError::ParseError(std::size_t position, const std::string& message)
    : ValidationError("expr", "syntax error at position " +
                                  std::to_string(position) + ": " + message),
      position_(position) {}

}  // namespace klyap
