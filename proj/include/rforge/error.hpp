#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rforge {

/// Base of every error raised by the library. `code()` is a short
/// machine-parsable identifier (e.g. "syntax_error", "unknown_task") that the
/// CLI prints verbatim.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

/// Byte span into a source text.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Raised by the STL and reward-language parsers. Carries the offending span.
class ParseError : public Error {
public:
  ParseError(std::string code, const std::string& message, SourceSpan span)
      : Error(std::move(code), message + " at offset " + std::to_string(span.begin)),
        span_(span) {}

  [[nodiscard]] SourceSpan span() const noexcept { return span_; }

private:
  SourceSpan span_;
};

/// Raised while evaluating a reward program or an STL atom.
class EvalError : public Error {
public:
  EvalError(std::string code, const std::string& message, std::string binding = {})
      : Error(std::move(code), message), binding_(std::move(binding)) {}

  /// Name of the binding (or "return") whose expression failed.
  [[nodiscard]] const std::string& binding() const noexcept { return binding_; }

private:
  std::string binding_;
};

} // namespace rforge
