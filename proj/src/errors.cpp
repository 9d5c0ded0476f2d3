#include "ccpipe/errors.hpp"

#include <sstream>

namespace ccpipe {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::MissingLevel: return "MissingLevel";
    case ErrorCode::DuplicateLevel: return "DuplicateLevel";
    case ErrorCode::DuplicateEntryId: return "DuplicateEntryId";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::SchemaUnknown: return "SchemaUnknown";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewStructures: return "TooFewStructures";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnknownEntry: return "UnknownEntry";
    case ErrorCode::NoAnalyses: return "NoAnalyses";
    case ErrorCode::BenchmarkFailed: return "BenchmarkFailed";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

namespace {

std::string join_errors(const std::vector<IndexedError>& errors,
                        const std::string& context) {
  std::ostringstream out;
  out << context << ": " << errors.size() << " invalid element(s)";
  for (const auto& e : errors) {
    out << "; [" << e.index << "] " << error_code_name(e.code) << ": "
        << e.message;
  }
  return out.str();
}

}  // namespace

AggregateError::AggregateError(std::vector<IndexedError> errors,
                               const std::string& context)
    : PipelineError(errors.empty() ? ErrorCode::ParseError : errors.front().code,
                    join_errors(errors, context)),
      errors_(std::move(errors)) {}

}  // namespace ccpipe
