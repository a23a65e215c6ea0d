#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aadllm {

enum class ErrorCode {
  // ingestion / generation
  MissingColumn,
  UnparseableValue,
  EmptyFile,
  InvalidConfig,
  InvalidInstance,
  // spc
  SeriesTooShort,
  AllPointsRemoved,
  // stats
  DegenerateBaseline,
  EmptyWindow,
  EmptyGroup,
  SingleClassLabels,
  // baseline
  SeriesShorterThanWindow,
  InsufficientWindows,
  ChannelMismatch,
  // promptgen
  FileNotFound,
  MalformedContext,
  ChannelCountMismatch,
  PromptTooLong,
  // backend
  Timeout,
  HttpError,
  ReplayMiss,
  AuthMissing,
  NoVerdictLine,
  MissingChannel,
  DuplicateChannel,
  UnknownToken,
  // detector
  MissingGroups,
  // eval
  LengthMismatch,
  EmptyEvaluation,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparseableValue: return "UnparseableValue";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::AllPointsRemoved: return "AllPointsRemoved";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::SingleClassLabels: return "SingleClassLabels";
    case ErrorCode::SeriesShorterThanWindow: return "SeriesShorterThanWindow";
    case ErrorCode::InsufficientWindows: return "InsufficientWindows";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MalformedContext: return "MalformedContext";
    case ErrorCode::ChannelCountMismatch: return "ChannelCountMismatch";
    case ErrorCode::PromptTooLong: return "PromptTooLong";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::AuthMissing: return "AuthMissing";
    case ErrorCode::NoVerdictLine: return "NoVerdictLine";
    case ErrorCode::MissingChannel: return "MissingChannel";
    case ErrorCode::DuplicateChannel: return "DuplicateChannel";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::MissingGroups: return "MissingGroups";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

  /// Same code, message prefixed with where it happened.
  Error with_context(const std::string& where) const { return Error(code_, where + ": " + message_); }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace aadllm
