#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace archattr {

enum class ErrorCode {
  Syntax,
  UnknownLayerKind,
  MissingField,
  UnexpectedField,
  DuplicateLayerName,
  DanglingReference,
  Cycle,
  InvalidGraph,
  KernelTooLarge,
  ShapeMismatch,
  ConvAfterFlatten,
  PathExplosion,
  DegenerateSplit,
  NotBinary,
  TooFewSamples,
  NonPositiveValue,
  DegenerateVariance,
  Underdetermined,
  NumericalFailure,
  GenerationExhausted,
  Io,
  Config,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& message)
      : Error(ErrorCode::Syntax, std::to_string(line) + ":" +
                                     std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace archattr
