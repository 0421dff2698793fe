#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rcd {

enum class ErrorCode {
  ParseError,
  IoError,
  NotWatertight,
  EmptyMesh,
  DegenerateInput,
  CapFailure,
  NoConvergence,
  NoValidPlane,
  OverlappingRegions,
  NoSamplesInRegion,
  EmptyInput,
  ClearanceViolation,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NotWatertight: return "NotWatertight";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::CapFailure: return "CapFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NoValidPlane: return "NoValidPlane";
    case ErrorCode::OverlappingRegions: return "OverlappingRegions";
    case ErrorCode::NoSamplesInRegion: return "NoSamplesInRegion";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ClearanceViolation: return "ClearanceViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Every failure in the library surfaces as this exception; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for failures caused by bad user input rather than internal faults.
  bool is_validation() const noexcept {
    switch (code_) {
      case ErrorCode::ParseError:
      case ErrorCode::NotWatertight:
      case ErrorCode::EmptyMesh:
      case ErrorCode::OverlappingRegions:
      case ErrorCode::InvalidArgument:
      case ErrorCode::EmptyInput:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace rcd
