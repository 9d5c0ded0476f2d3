#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ccpipe {

struct AgentRequest {
  std::string agent_name;
  std::string prompt;
  std::string response_schema_id;
  // Unset fields fall back to the gateway defaults.
  std::optional<double> temperature;
  std::optional<int> max_retries;
  // Optional per-request validation run after the schema validator inside the
  // retry loop (e.g. "breakdown ids must be a subset of this call's matches").
  std::function<void(const nlohmann::json&)> validate_extra;
};

struct AgentResponse {
  nlohmann::json document;
  std::string raw_text;
  int attempts = 1;
};

// Hash of (agent_name, prompt, schema_id). Temperature is excluded so replay
// tolerates sampling-config drift.
std::string request_digest(const AgentRequest& request);

// Validators throw PipelineError on violation; the gateway uses the message
// as the repair instruction and the code as the surfaced error.
class SchemaRegistry {
 public:
  using Validator = std::function<void(const nlohmann::json&)>;

  void add(std::string schema_id, Validator validator);
  bool contains(const std::string& schema_id) const;
  void validate(const std::string& schema_id, const nlohmann::json& doc) const;

 private:
  std::map<std::string, Validator> validators_;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;

  virtual std::string complete(const AgentRequest& request) = 0;
  virtual std::string provider_id() const = 0;

  std::size_t call_count() const { return calls_.load(); }

 protected:
  void count_call() { calls_.fetch_add(1); }

 private:
  std::atomic<std::size_t> calls_{0};
};

struct TranscriptRecord {
  std::string digest;
  std::string agent_name;
  std::string raw_text;
};

// Recorded provider traffic for one run. Saved as JSON lines, one record per
// line, in canonical order (sorted by digest, arrival order within a digest),
// so equal runs produce byte-equal files regardless of scheduling.
struct Transcript {
  std::string run_id;
  std::vector<TranscriptRecord> records;

  void save(const std::filesystem::path& path) const;
  static Transcript load(const std::filesystem::path& path);
};

// Wraps another provider and captures every (request digest, raw response).
class RecordingProvider : public LlmProvider {
 public:
  explicit RecordingProvider(std::shared_ptr<LlmProvider> inner);

  std::string complete(const AgentRequest& request) override;
  std::string provider_id() const override;

  Transcript snapshot(std::string run_id) const;

 private:
  std::shared_ptr<LlmProvider> inner_;
  mutable std::mutex mutex_;
  std::vector<TranscriptRecord> records_;
};

// Serves responses from a transcript by request digest (FIFO per digest).
// Throws ReplayMiss when a request has no remaining record.
class ReplayProvider : public LlmProvider {
 public:
  explicit ReplayProvider(const Transcript& transcript);

  std::string complete(const AgentRequest& request) override;
  std::string provider_id() const override { return "replay"; }

 private:
  std::mutex mutex_;
  std::map<std::string, std::deque<std::string>> by_digest_;
};

// Canned responses per agent name, served in order; the final response
// repeats once the queue is exhausted. Unknown agents fall through to the
// fallback provider when one is set.
class ScriptedMockProvider : public LlmProvider {
 public:
  ScriptedMockProvider() = default;

  void enqueue(const std::string& agent_name, std::string response);
  void set_fallback(std::shared_ptr<LlmProvider> fallback);

  // Fixture file: {"agent_name": "response" | {...} | ["r1", {...}], ...}.
  // Object values are serialized; array values queue in order.
  static std::shared_ptr<ScriptedMockProvider> from_fixture_file(
      const std::filesystem::path& path);

  std::string complete(const AgentRequest& request) override;
  std::string provider_id() const override { return "scripted-mock"; }

 private:
  std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> responses_;
  std::map<std::string, std::size_t> cursor_;
  std::shared_ptr<LlmProvider> fallback_;
};

// Deterministic offline model: synthesizes a schema-valid response for each
// pipeline agent as a pure function of (seed, agent name, prompt).
class SyntheticMockProvider : public LlmProvider {
 public:
  explicit SyntheticMockProvider(std::uint64_t seed = 0);

  std::string complete(const AgentRequest& request) override;
  std::string provider_id() const override { return "synthetic-mock"; }

 private:
  std::uint64_t seed_;
};

// OpenAI-compatible /chat/completions endpoint.
class HttpLlmProvider : public LlmProvider {
 public:
  HttpLlmProvider(std::string base_url, std::string api_key,
                  std::string model_id);

  std::string complete(const AgentRequest& request) override;
  std::string provider_id() const override { return "openai"; }

 private:
  std::string base_url_;
  std::string api_key_;
  std::string model_id_;
};

struct GatewayOptions {
  int max_in_flight = 4;
  double temperature = 0.0;
  int max_retries = 2;
};

// Single choke-point for model calls: schema validation with bounded
// repair retries, per-agent call accounting, and an in-flight limit.
class LlmGateway {
 public:
  LlmGateway(std::shared_ptr<LlmProvider> provider, SchemaRegistry schemas,
             GatewayOptions options = {});

  // Returns a schema-valid document. On validation failure the provider is
  // retried with the original prompt plus a repair instruction describing the
  // violation, up to max_retries extra attempts; on exhaustion the last
  // validation error is rethrown as a GatewayError preserving its code.
  // Provider transport errors are not retried.
  AgentResponse complete_structured(const AgentRequest& request);

  SchemaRegistry& schemas() { return schemas_; }
  const LlmProvider& provider() const { return *provider_; }

  // Completed complete_structured invocations (retries are one invocation).
  std::size_t total_calls() const;
  std::size_t calls_for(const std::string& agent_name) const;

 private:
  std::shared_ptr<LlmProvider> provider_;
  SchemaRegistry schemas_;
  GatewayOptions options_;

  mutable std::mutex mutex_;
  std::condition_variable slot_available_;
  int in_flight_ = 0;
  std::map<std::string, std::size_t> calls_by_agent_;
};

// Extracts the JSON object from raw model text: direct parse, then fenced
// ```json blocks, then the outermost brace span. Throws MalformedResponse.
nlohmann::json extract_json_object(const std::string& raw_text);

}  // namespace ccpipe
