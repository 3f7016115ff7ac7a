#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpv {

/// Every failure the library reports carries one of these codes so callers
/// (repair loop, pipeline, REST layer, CLI exit codes) can branch on kind.
enum class Errc {
  // domain-model
  SchemaViolation,
  NoJsonFound,
  DuplicateId,
  UnknownId,
  // segmentation
  InvalidWindow,
  EmptyTranscript,
  // embedding-service
  EmbeddingUnavailable,
  EmptyText,
  DimensionMismatch,
  // inference-gateway
  Timeout,
  HttpError,
  ConnectionRefused,
  EndpointFailure,
  StructuredOutputFailure,
  MockScriptMiss,
  // metrics
  AllZeroCounts,
  EmptyTally,
  TooFewRuns,
  ZeroVariance,
  EmptyGold,
  EmptyModel,
  TooFewItems,
  LengthMismatch,
  AllZeroDifferences,
  ZeroPooledSd,
  // annotation-store
  UnknownRun,
  UnknownStatement,
  UnknownAnnotator,
  AlreadyAdjudicated,
  NotADisagreement,
  NoCompleteJudgments,
  // cli-and-reporting
  ConfigError,
  MissingGold,
  PortInUse,
  // general
  IoError,
  InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Transport failures raised by chat backends; `status` is the HTTP status for
/// HttpError and 0 otherwise.
class TransportError : public Error {
 public:
  TransportError(Errc code, int status, const std::string& message)
      : Error(code, message), status_(status) {}

  int status() const noexcept { return status_; }
  bool retryable() const noexcept {
    return code() == Errc::Timeout || code() == Errc::HttpError ||
           code() == Errc::ConnectionRefused;
  }

 private:
  int status_;
};

}  // namespace mpv
