#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaitpose {

enum class ErrorCode {
  MalformedJson,
  BadKeypointArity,
  BadConfidence,
  EmptyDirectory,
  Io,
  NoInitFrame,
  NoScale,
  TooShort,
  BadEdges,
  SingularSystem,
  NoConvergence,
  DivergedLoss,
  SingleClass,
  BadLevel,
  TooFewSamples,
  LengthMismatch,
  SingleClassAuc,
  BadHeader,
  BadArity,
  NonFiniteValue,
  UnknownKind,
  VersionMismatch,
  ParseError,
  NyquistViolation,
  FeatureMismatch,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::BadKeypointArity: return "BadKeypointArity";
    case ErrorCode::BadConfidence: return "BadConfidence";
    case ErrorCode::EmptyDirectory: return "EmptyDirectory";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NoInitFrame: return "NoInitFrame";
    case ErrorCode::NoScale: return "NoScale";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::BadEdges: return "BadEdges";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::BadLevel: return "BadLevel";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingleClassAuc: return "SingleClassAuc";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::BadArity: return "BadArity";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NyquistViolation: return "NyquistViolation";
    case ErrorCode::FeatureMismatch: return "FeatureMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// CLI maps them to exit codes and a single `error: <Code>: ...` line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace gaitpose
