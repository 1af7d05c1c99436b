#pragma once

#include <stdexcept>
#include <string>

namespace wdro {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NotSymmetric,
  NotPSD,
  NoBracket,
  MaxIterExceeded,
  Unbounded,
  Infeasible,
  NumericalFailure,
  UnsupportedCombination,
  UnsupportedSupport,
  UnsupportedLoss,
  UnsupportedCase,
  NoInteriorSolution,
  SingularBlock,
  PairingMismatch,
  InsufficientData,
  EmptySample,
  UsageError,
  IoError,
};

inline const char* code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::UnsupportedCombination: return "UnsupportedCombination";
    case ErrorCode::UnsupportedSupport: return "UnsupportedSupport";
    case ErrorCode::UnsupportedLoss: return "UnsupportedLoss";
    case ErrorCode::UnsupportedCase: return "UnsupportedCase";
    case ErrorCode::NoInteriorSolution: return "NoInteriorSolution";
    case ErrorCode::SingularBlock: return "SingularBlock";
    case ErrorCode::PairingMismatch: return "PairingMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace wdro
