#pragma once

#include <stdexcept>
#include <string>

namespace roblearn {

enum class ErrorCode {
  ZeroWeight,
  EmptyDataset,
  DimensionMismatch,
  MissingPerturbations,
  Unsupported,
  UnsupportedGeometry,
  SizeLimit,
  OracleViolation,
  NotSeparable,
  AllZeroWeights,
  InvalidNorm,
  InvalidArgument,
  SourceExhausted,
  StreamExhausted,
  WeakLearnerFailed,
  RetryLimit,
  MistakeCapExceeded,
  EmptyPool,
  NoRealizableMember,
  ParseError,
  IoError,
  ConfigError,
};

inline const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ZeroWeight: return "ZeroWeight";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingPerturbations: return "MissingPerturbations";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::UnsupportedGeometry: return "UnsupportedGeometry";
    case ErrorCode::SizeLimit: return "SizeLimit";
    case ErrorCode::OracleViolation: return "OracleViolation";
    case ErrorCode::NotSeparable: return "NotSeparable";
    case ErrorCode::AllZeroWeights: return "AllZeroWeights";
    case ErrorCode::InvalidNorm: return "InvalidNorm";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SourceExhausted: return "SourceExhausted";
    case ErrorCode::StreamExhausted: return "StreamExhausted";
    case ErrorCode::WeakLearnerFailed: return "WeakLearnerFailed";
    case ErrorCode::RetryLimit: return "RetryLimit";
    case ErrorCode::MistakeCapExceeded: return "MistakeCapExceeded";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::NoRealizableMember: return "NoRealizableMember";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace roblearn
