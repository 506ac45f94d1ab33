#pragma once

#include <stdexcept>
#include <string>

namespace arealepi {

enum class ErrorKind {
  UnknownRegion,
  SelfLoop,
  NegativeCount,
  MissingCell,
  NonConsecutiveDates,
  InvalidInput,
  DimensionMismatch,
  NonFiniteInput,
  NonFiniteGradient,
  ZeroVariance,
  SingularInformation,
  NonFiniteStep,
  ExplosionGuard,
  SchemaMismatch,
};

const char* to_string(ErrorKind kind);

/// Base of every error raised by the library. `kind()` identifies the failure
/// class so callers (the CLI in particular) can map it onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownRegion: return "UnknownRegion";
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::NegativeCount: return "NegativeCount";
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::NonConsecutiveDates: return "NonConsecutiveDates";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::SingularInformation: return "SingularInformation";
    case ErrorKind::NonFiniteStep: return "NonFiniteStep";
    case ErrorKind::ExplosionGuard: return "ExplosionGuard";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
  }
  return "Error";
}

}  // namespace arealepi
