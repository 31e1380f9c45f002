#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rbl {

struct Span {
  int line = 0;  // 1-based; 0 means "no location"
  int column = 0;
  int length = 0;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  Span span;
  std::string origin;  // file path or inline tag

  bool is_error() const { return severity == Severity::Error; }
};

using Diagnostics = std::vector<Diagnostic>;

inline bool has_errors(const Diagnostics& ds) {
  for (const auto& d : ds)
    if (d.is_error()) return true;
  return false;
}

inline std::string format_diagnostic(const Diagnostic& d) {
  std::string s;
  if (!d.origin.empty()) s += d.origin + ":";
  if (d.span.line > 0) {
    s += std::to_string(d.span.line) + ":" + std::to_string(d.span.column) + ":";
  }
  s += d.severity == Severity::Error ? " error: " : " warning: ";
  s += d.message;
  return s;
}

// Thrown for API misuse (arity mismatches, mixed schemes, malformed inputs).
// Parse/validation problems are reported as Diagnostics instead.
struct MalformedInput : std::runtime_error {
  explicit MalformedInput(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rbl
