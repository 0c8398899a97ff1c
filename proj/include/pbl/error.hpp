#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pbl {

/// Category of a library failure. Used by the CLI to emit a machine-readable
/// error record alongside the human message.
enum class ErrorKind {
  invalid_argument,
  slip_vanishes,
  non_monotone_map,
  parabolicity,
  compatibility,
  degeneracy,
  no_convergence,
  no_sign_change,
  non_monotone_response,
  collar_too_wide,
  parse,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::slip_vanishes: return "slip_vanishes";
    case ErrorKind::non_monotone_map: return "non_monotone_map";
    case ErrorKind::parabolicity: return "parabolicity";
    case ErrorKind::compatibility: return "compatibility";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::no_convergence: return "no_convergence";
    case ErrorKind::no_sign_change: return "no_sign_change";
    case ErrorKind::non_monotone_response: return "non_monotone_response";
    case ErrorKind::collar_too_wide: return "collar_too_wide";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double value = 0.0)
      : std::runtime_error(what), kind_(kind), value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Offending scalar (a residual, a sample value, ...) when one exists.
  double value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

namespace detail {
inline void require(bool ok, const std::string& msg,
                    ErrorKind kind = ErrorKind::invalid_argument) {
  if (!ok) throw Error(kind, msg);
}
}  // namespace detail

}  // namespace pbl
