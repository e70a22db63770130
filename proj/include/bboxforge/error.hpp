#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bboxforge {

enum class ErrorKind {
  DepthNonPositive,
  RectOutOfBounds,
  DimensionMismatch,
  MissingFile,
  UnknownClass,
  MalformedMeta,
  MalformedConfig,
  MalformedPalette,
  OutOfRange,
  IoFailure,
  InvalidImage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DepthNonPositive: return "DepthNonPositive";
    case ErrorKind::RectOutOfBounds: return "RectOutOfBounds";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::MalformedMeta: return "MalformedMeta";
    case ErrorKind::MalformedConfig: return "MalformedConfig";
    case ErrorKind::MalformedPalette: return "MalformedPalette";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::InvalidImage: return "InvalidImage";
  }
  return "Unknown";
}

// All library failures are reported through this type; `kind` is stable for
// programmatic handling, what() carries the offending path or field.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bboxforge
