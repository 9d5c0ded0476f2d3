#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ccpipe/combinator.hpp"
#include "ccpipe/embedding.hpp"
#include "ccpipe/evaluation.hpp"
#include "ccpipe/llm_gateway.hpp"
#include "ccpipe/retrieval.hpp"

namespace ccpipe {

enum class RunMode { live, mock, replay };

std::string_view run_mode_name(RunMode mode);
std::optional<RunMode> run_mode_from_name(std::string_view name);

struct ProviderConfig {
  std::string provider_id = "mock";
  std::string model_id;
  std::string base_url;
  std::string api_key;
  std::size_t mock_dim = 16;

  bool is_mock() const { return provider_id == "mock"; }
};

// Full pipeline configuration. Resolution order is flags > environment
// variables > config file > defaults; the CLI applies flag overrides after
// load_pipeline_config has merged the rest.
struct PipelineConfig {
  PipelineConfig() {
    llm.model_id = "mock-llm";
    retrieval_embedder.model_id = "mock-embed-retrieval";
    evaluation_embedder.model_id = "mock-embed-eval";
  }

  RunMode mode = RunMode::mock;
  std::uint64_t seed = 0;

  ProviderConfig llm;
  ProviderConfig retrieval_embedder;
  ProviderConfig evaluation_embedder;

  RetrievalConfig retrieval;
  CombinatorConfig combinator;
  EvalConfig evaluation;

  double temperature = 0.0;
  int max_retries = 2;
  int max_in_flight = 4;

  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> fixtures_path;    // scripted responses
  std::optional<std::filesystem::path> transcript_path;  // replay source
  std::filesystem::path out_root = "out";
  bool strict = false;
};

// Parses the optional config file and merges CC_LLM_* / CC_EMBED_* /
// CC_CACHE_DIR environment variables over it.
PipelineConfig load_pipeline_config(
    const std::optional<std::filesystem::path>& config_file);

// Mode invariants: replay requires a transcript, live requires credentials
// for every non-mock provider. Throws ConfigError.
void validate_config(const PipelineConfig& config);

// The wired object graph for one process. The gateway's provider is always
// wrapped in the recorder so any run can dump its transcript.
struct Pipeline {
  std::shared_ptr<RecordingProvider> recorder;
  std::shared_ptr<EmbeddingCache> cache;
  std::unique_ptr<LlmGateway> gateway;
  std::unique_ptr<Embedder> retrieval_embedder;
  std::unique_ptr<Embedder> evaluation_embedder;
  std::unique_ptr<Retriever> retriever;
  std::unique_ptr<IdeaGenerator> generator;
  std::unique_ptr<Evaluator> evaluator;
};

Pipeline build_pipeline(const PipelineConfig& config);

}  // namespace ccpipe
