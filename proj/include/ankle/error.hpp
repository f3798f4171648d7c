#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ankle {

enum class ErrorKind {
  InvalidParameter,
  TooShort,
  InsufficientStrides,
  InsufficientData,
  DomainError,
  UnreachableTarget,
  InvalidLut,
  SimulationDiverged,
  GapError,
  NoMinimum,
  NoEvents,
  Parse,
  Schema,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::TooShort: return "too-short";
    case ErrorKind::InsufficientStrides: return "insufficient-strides";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::DomainError: return "domain-error";
    case ErrorKind::UnreachableTarget: return "unreachable-target";
    case ErrorKind::InvalidLut: return "invalid-lut";
    case ErrorKind::SimulationDiverged: return "simulation-diverged";
    case ErrorKind::GapError: return "gap-error";
    case ErrorKind::NoMinimum: return "no-minimum";
    case ErrorKind::NoEvents: return "no-events";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Schema: return "schema-error";
    case ErrorKind::Io: return "io-error";
  }
  return "unknown";
}

// Every failure in the library surfaces as an Error carrying its kind, so
// callers (the CLI in particular) can map kinds onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace ankle
