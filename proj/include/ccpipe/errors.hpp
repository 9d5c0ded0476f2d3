#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ccpipe {

// Every failure surfaced by the pipeline carries one of these codes so that
// callers (and the CLI) can branch on the kind of failure without parsing
// message text.
enum class ErrorCode {
  // document and corpus validation
  MissingField,
  EmptyField,
  MissingLevel,
  DuplicateLevel,
  DuplicateEntryId,
  ParseError,
  IoError,

  // embedding
  EmptyText,
  DimMismatch,
  ZeroVector,
  ProviderError,

  // llm gateway
  MalformedResponse,
  SchemaUnknown,
  ReplayMiss,

  // retrieval / combination
  EmptyInput,
  TooFewStructures,
  EmptyCorpus,
  UnknownEntry,
  NoAnalyses,

  // evaluation / configuration
  BenchmarkFailed,
  ConfigError,
};

std::string_view error_code_name(ErrorCode code);

class PipelineError : public std::runtime_error {
 public:
  PipelineError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// A validation failure tied to an element position inside a container file
// (corpus entry index, benchmark case index).
struct IndexedError {
  std::size_t index = 0;
  ErrorCode code = ErrorCode::ParseError;
  std::string message;
};

// Collects per-element failures from a container file. The top-level code is
// the first element's code so single-fault files still map to their specific
// error.
class AggregateError : public PipelineError {
 public:
  AggregateError(std::vector<IndexedError> errors, const std::string& context);

  const std::vector<IndexedError>& errors() const noexcept { return errors_; }

 private:
  std::vector<IndexedError> errors_;
};

// Thrown by the gateway when schema repair retries are exhausted; preserves
// the last validation failure's code and the total attempt count.
class GatewayError : public PipelineError {
 public:
  GatewayError(ErrorCode code, const std::string& message, int attempts)
      : PipelineError(code, message + " (after " + std::to_string(attempts) +
                                " attempts)"),
        attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

}  // namespace ccpipe
