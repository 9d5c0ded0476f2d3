#include "ccpipe/config.hpp"

#include <nlohmann/json.hpp>

#include "ccpipe/errors.hpp"
#include "ccpipe/util.hpp"

namespace ccpipe {

using nlohmann::json;

std::string_view run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::live: return "live";
    case RunMode::mock: return "mock";
    case RunMode::replay: return "replay";
  }
  return "";
}

std::optional<RunMode> run_mode_from_name(std::string_view name) {
  if (name == "live") return RunMode::live;
  if (name == "mock") return RunMode::mock;
  if (name == "replay") return RunMode::replay;
  return std::nullopt;
}

namespace {

void merge_provider(ProviderConfig& target, const json& doc) {
  if (auto it = doc.find("provider_id"); it != doc.end()) {
    target.provider_id = it->get<std::string>();
  }
  if (auto it = doc.find("model_id"); it != doc.end()) {
    target.model_id = it->get<std::string>();
  }
  if (auto it = doc.find("base_url"); it != doc.end()) {
    target.base_url = it->get<std::string>();
  }
  if (auto it = doc.find("api_key"); it != doc.end()) {
    target.api_key = it->get<std::string>();
  }
  if (auto it = doc.find("mock_dim"); it != doc.end()) {
    target.mock_dim = it->get<std::size_t>();
  }
}

void merge_retrieval(RetrievalConfig& target, const json& doc) {
  if (auto it = doc.find("min_structures"); it != doc.end()) {
    target.min_structures = it->get<int>();
  }
  if (auto it = doc.find("max_structures"); it != doc.end()) {
    target.max_structures = it->get<int>();
  }
  if (auto it = doc.find("top_k"); it != doc.end()) {
    target.top_k = it->get<int>();
  }
  if (auto it = doc.find("min_score"); it != doc.end() && !it->is_null()) {
    target.min_score = it->get<double>();
  }
}

void merge_combinator(CombinatorConfig& target, const json& doc) {
  if (auto it = doc.find("n_candidates"); it != doc.end()) {
    target.n_candidates = it->get<int>();
  }
  if (auto it = doc.find("include_raw_entries"); it != doc.end()) {
    target.include_raw_entries = it->get<bool>();
  }
  if (auto it = doc.find("parallel_stage1"); it != doc.end()) {
    target.parallel_stage1 = it->get<bool>();
  }
}

}  // namespace

PipelineConfig load_pipeline_config(
    const std::optional<std::filesystem::path>& config_file) {
  PipelineConfig config;

  if (config_file) {
    json doc;
    try {
      doc = json::parse(read_text_file(*config_file));
    } catch (const json::parse_error& e) {
      throw PipelineError(ErrorCode::ConfigError,
                          "config file " + config_file->string() + ": " +
                              e.what());
    }
    if (!doc.is_object()) {
      throw PipelineError(ErrorCode::ConfigError,
                          "config file must hold a JSON object");
    }
    try {
      if (auto it = doc.find("mode"); it != doc.end()) {
        auto mode = run_mode_from_name(it->get<std::string>());
        if (!mode) {
          throw PipelineError(ErrorCode::ConfigError,
                              "unknown mode '" + it->get<std::string>() + "'");
        }
        config.mode = *mode;
      }
      if (auto it = doc.find("seed"); it != doc.end()) {
        config.seed = it->get<std::uint64_t>();
      }
      if (auto it = doc.find("llm"); it != doc.end()) {
        merge_provider(config.llm, *it);
      }
      if (auto it = doc.find("retrieval_embedder"); it != doc.end()) {
        merge_provider(config.retrieval_embedder, *it);
      }
      if (auto it = doc.find("evaluation_embedder"); it != doc.end()) {
        merge_provider(config.evaluation_embedder, *it);
      }
      if (auto it = doc.find("retrieval"); it != doc.end()) {
        merge_retrieval(config.retrieval, *it);
      }
      if (auto it = doc.find("combinator"); it != doc.end()) {
        merge_combinator(config.combinator, *it);
      }
      if (auto it = doc.find("case_parallelism"); it != doc.end()) {
        config.evaluation.case_parallelism = it->get<int>();
      }
      if (auto it = doc.find("temperature"); it != doc.end()) {
        config.temperature = it->get<double>();
      }
      if (auto it = doc.find("max_retries"); it != doc.end()) {
        config.max_retries = it->get<int>();
      }
      if (auto it = doc.find("max_in_flight"); it != doc.end()) {
        config.max_in_flight = it->get<int>();
      }
      if (auto it = doc.find("cache_dir"); it != doc.end() && !it->is_null()) {
        config.cache_dir = it->get<std::string>();
      }
      if (auto it = doc.find("fixtures"); it != doc.end() && !it->is_null()) {
        config.fixtures_path = it->get<std::string>();
      }
      if (auto it = doc.find("transcript"); it != doc.end() && !it->is_null()) {
        config.transcript_path = it->get<std::string>();
      }
      if (auto it = doc.find("out_root"); it != doc.end()) {
        config.out_root = it->get<std::string>();
      }
    } catch (const json::exception& e) {
      throw PipelineError(ErrorCode::ConfigError,
                          std::string("config file field has wrong type: ") +
                              e.what());
    }
  }

  // Environment overrides sit between the config file and CLI flags.
  config.llm.api_key = get_env_or("CC_LLM_API_KEY", config.llm.api_key);
  config.llm.base_url = get_env_or("CC_LLM_BASE_URL", config.llm.base_url);
  config.llm.model_id = get_env_or("CC_LLM_MODEL", config.llm.model_id);
  config.retrieval_embedder.api_key =
      get_env_or("CC_EMBED_API_KEY", config.retrieval_embedder.api_key);
  config.retrieval_embedder.base_url =
      get_env_or("CC_EMBED_BASE_URL", config.retrieval_embedder.base_url);
  config.retrieval_embedder.model_id =
      get_env_or("CC_EMBED_MODEL", config.retrieval_embedder.model_id);
  const std::string cache_dir = get_env_or("CC_CACHE_DIR", "");
  if (!cache_dir.empty()) {
    config.cache_dir = cache_dir;
  }
  return config;
}

void validate_config(const PipelineConfig& config) {
  if (config.retrieval.min_structures < 1 ||
      config.retrieval.max_structures < config.retrieval.min_structures) {
    throw PipelineError(ErrorCode::ConfigError,
                        "structure bounds must satisfy 1 <= min <= max");
  }
  if (config.retrieval.top_k < 1) {
    throw PipelineError(ErrorCode::ConfigError, "top_k must be >= 1");
  }
  if (config.max_retries < 0 || config.max_in_flight < 1 ||
      config.combinator.n_candidates < 1) {
    throw PipelineError(ErrorCode::ConfigError,
                        "retry/concurrency/candidate counts out of range");
  }
  switch (config.mode) {
    case RunMode::replay:
      if (!config.transcript_path) {
        throw PipelineError(ErrorCode::ConfigError,
                            "replay mode requires a transcript path");
      }
      break;
    case RunMode::live: {
      auto require_credentials = [](const ProviderConfig& provider,
                                    std::string_view role) {
        if (provider.is_mock()) {
          return;  // a mock provider in live mode is allowed (e.g. eval side)
        }
        if (provider.base_url.empty() || provider.api_key.empty() ||
            provider.model_id.empty()) {
          throw PipelineError(ErrorCode::ConfigError,
                              std::string(role) +
                                  " provider needs base_url, api_key, and "
                                  "model_id in live mode");
        }
      };
      if (config.llm.is_mock()) {
        throw PipelineError(ErrorCode::ConfigError,
                            "live mode requires a non-mock llm provider");
      }
      require_credentials(config.llm, "llm");
      require_credentials(config.retrieval_embedder, "retrieval embedder");
      require_credentials(config.evaluation_embedder, "evaluation embedder");
      break;
    }
    case RunMode::mock:
      break;  // fixtures are an optional overlay over the synthetic mock
  }
}

namespace {

std::unique_ptr<Embedder> build_embedder(const ProviderConfig& provider,
                                         std::uint64_t seed,
                                         std::shared_ptr<EmbeddingCache> cache) {
  std::shared_ptr<EmbeddingProvider> impl;
  if (provider.is_mock()) {
    impl = std::make_shared<MockEmbeddingProvider>(
        seed, provider.mock_dim, provider.provider_id,
        provider.model_id.empty() ? "mock-embed-16" : provider.model_id);
  } else {
    impl = std::make_shared<HttpEmbeddingProvider>(
        provider.base_url, provider.api_key, provider.model_id,
        provider.provider_id);
  }
  return std::make_unique<Embedder>(std::move(impl), std::move(cache));
}

}  // namespace

Pipeline build_pipeline(const PipelineConfig& config) {
  validate_config(config);
  Pipeline pipeline;

  std::shared_ptr<LlmProvider> llm;
  switch (config.mode) {
    case RunMode::mock: {
      auto synthetic = std::make_shared<SyntheticMockProvider>(config.seed);
      if (config.fixtures_path) {
        auto scripted =
            ScriptedMockProvider::from_fixture_file(*config.fixtures_path);
        scripted->set_fallback(synthetic);
        llm = scripted;
      } else {
        llm = synthetic;
      }
      break;
    }
    case RunMode::replay:
      llm = std::make_shared<ReplayProvider>(
          Transcript::load(*config.transcript_path));
      break;
    case RunMode::live:
      llm = std::make_shared<HttpLlmProvider>(
          config.llm.base_url, config.llm.api_key, config.llm.model_id);
      break;
  }
  pipeline.recorder = std::make_shared<RecordingProvider>(std::move(llm));

  if (config.cache_dir) {
    pipeline.cache = std::make_shared<EmbeddingCache>(*config.cache_dir);
  }
  pipeline.retrieval_embedder =
      build_embedder(config.retrieval_embedder, config.seed, pipeline.cache);
  pipeline.evaluation_embedder =
      build_embedder(config.evaluation_embedder, config.seed, pipeline.cache);

  SchemaRegistry schemas;
  register_retrieval_schemas(schemas, config.retrieval);
  register_combinator_schemas(schemas);
  register_evaluation_schemas(schemas);

  GatewayOptions options;
  options.max_in_flight = config.max_in_flight;
  options.temperature = config.temperature;
  options.max_retries = config.max_retries;
  pipeline.gateway = std::make_unique<LlmGateway>(pipeline.recorder,
                                                  std::move(schemas), options);

  pipeline.retriever = std::make_unique<Retriever>(
      *pipeline.gateway, *pipeline.retrieval_embedder, config.retrieval);
  pipeline.generator = std::make_unique<IdeaGenerator>(
      *pipeline.gateway, *pipeline.retriever, config.combinator);
  pipeline.evaluator = std::make_unique<Evaluator>(
      *pipeline.gateway, *pipeline.retriever, *pipeline.generator,
      *pipeline.evaluation_embedder, config.evaluation);
  return pipeline;
}

}  // namespace ccpipe
