#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shadowlab {

enum class ErrorKind {
  domain,
  parameter,
  window,
  precondition,
  constants,
  grid,
  size,
  splice,
  resolution,
  region,
  degenerate,
  config,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// that callers (and the CLI) can branch on the category without parsing
/// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::window: return "window";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::constants: return "constants";
    case ErrorKind::grid: return "grid";
    case ErrorKind::size: return "size";
    case ErrorKind::splice: return "splice";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::region: return "region";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace shadowlab
