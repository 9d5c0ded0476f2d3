#include "ccpipe/llm_gateway.hpp"

#include <regex>
#include <sstream>

#include "ccpipe/errors.hpp"
#include "ccpipe/http_client.hpp"
#include "ccpipe/util.hpp"

namespace ccpipe {

using nlohmann::json;
using nlohmann::ordered_json;

std::string request_digest(const AgentRequest& request) {
  return sha256_hex({request.agent_name, request.prompt,
                     request.response_schema_id});
}

void SchemaRegistry::add(std::string schema_id, Validator validator) {
  validators_[std::move(schema_id)] = std::move(validator);
}

bool SchemaRegistry::contains(const std::string& schema_id) const {
  return validators_.count(schema_id) > 0;
}

void SchemaRegistry::validate(const std::string& schema_id,
                              const json& doc) const {
  auto it = validators_.find(schema_id);
  if (it == validators_.end()) {
    throw PipelineError(ErrorCode::SchemaUnknown,
                        "no schema registered under '" + schema_id + "'");
  }
  it->second(doc);
}

json extract_json_object(const std::string& raw_text) {
  const std::string trimmed = trim_copy(raw_text);

  auto try_parse = [](const std::string& text) -> std::optional<json> {
    try {
      json doc = json::parse(text);
      if (doc.is_object()) {
        return doc;
      }
    } catch (const json::parse_error&) {
    }
    return std::nullopt;
  };

  if (auto doc = try_parse(trimmed)) {
    return *doc;
  }

  static const std::regex fence(R"(```(?:json)?\s*([\s\S]*?)```)");
  std::smatch match;
  if (std::regex_search(trimmed, match, fence)) {
    if (auto doc = try_parse(match[1].str())) {
      return *doc;
    }
  }

  const auto first = trimmed.find('{');
  const auto last = trimmed.rfind('}');
  if (first != std::string::npos && last != std::string::npos && last > first) {
    if (auto doc = try_parse(trimmed.substr(first, last - first + 1))) {
      return *doc;
    }
  }
  throw PipelineError(ErrorCode::MalformedResponse,
                      "response contains no parseable JSON object");
}

void Transcript::save(const std::filesystem::path& path) const {
  std::vector<TranscriptRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TranscriptRecord& a, const TranscriptRecord& b) {
                     return a.digest < b.digest;
                   });
  std::ostringstream out;
  for (const auto& record : sorted) {
    ordered_json line;
    line["digest"] = record.digest;
    line["agent_name"] = record.agent_name;
    line["raw_text"] = record.raw_text;
    out << line.dump() << "\n";
  }
  write_text_file(path, out.str());
}

Transcript Transcript::load(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  Transcript transcript;
  transcript.run_id = path.stem().string();
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) {
      continue;
    }
    try {
      const json record = json::parse(line);
      transcript.records.push_back({record.at("digest").get<std::string>(),
                                    record.at("agent_name").get<std::string>(),
                                    record.at("raw_text").get<std::string>()});
    } catch (const std::exception& e) {
      throw PipelineError(ErrorCode::ParseError,
                          "transcript line " + std::to_string(line_no) +
                              " invalid: " + e.what());
    }
  }
  return transcript;
}

RecordingProvider::RecordingProvider(std::shared_ptr<LlmProvider> inner)
    : inner_(std::move(inner)) {}

std::string RecordingProvider::complete(const AgentRequest& request) {
  count_call();
  std::string raw = inner_->complete(request);
  std::lock_guard<std::mutex> lock(mutex_);
  records_.push_back({request_digest(request), request.agent_name, raw});
  return raw;
}

std::string RecordingProvider::provider_id() const {
  return inner_->provider_id() + "+recorded";
}

Transcript RecordingProvider::snapshot(std::string run_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  Transcript transcript;
  transcript.run_id = std::move(run_id);
  transcript.records = records_;
  return transcript;
}

ReplayProvider::ReplayProvider(const Transcript& transcript) {
  for (const auto& record : transcript.records) {
    by_digest_[record.digest].push_back(record.raw_text);
  }
}

std::string ReplayProvider::complete(const AgentRequest& request) {
  count_call();
  const std::string digest = request_digest(request);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = by_digest_.find(digest);
  if (it == by_digest_.end() || it->second.empty()) {
    throw PipelineError(ErrorCode::ReplayMiss,
                        "no transcript record for agent '" +
                            request.agent_name + "' digest " + digest);
  }
  std::string raw = std::move(it->second.front());
  it->second.pop_front();
  return raw;
}

void ScriptedMockProvider::enqueue(const std::string& agent_name,
                                   std::string response) {
  std::lock_guard<std::mutex> lock(mutex_);
  responses_[agent_name].push_back(std::move(response));
}

void ScriptedMockProvider::set_fallback(std::shared_ptr<LlmProvider> fallback) {
  fallback_ = std::move(fallback);
}

std::shared_ptr<ScriptedMockProvider> ScriptedMockProvider::from_fixture_file(
    const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw PipelineError(ErrorCode::ParseError,
                        "fixture file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw PipelineError(ErrorCode::ParseError,
                        "fixture file must be a JSON object keyed by agent");
  }
  auto provider = std::make_shared<ScriptedMockProvider>();
  auto add_one = [&](const std::string& agent, const json& value) {
    provider->enqueue(agent, value.is_string()
                                 ? value.get<std::string>()
                                 : value.dump());
  };
  for (const auto& item : doc.items()) {
    if (item.value().is_array()) {
      for (const auto& element : item.value()) {
        add_one(item.key(), element);
      }
    } else {
      add_one(item.key(), item.value());
    }
  }
  return provider;
}

std::string ScriptedMockProvider::complete(const AgentRequest& request) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = responses_.find(request.agent_name);
    if (it != responses_.end()) {
      count_call();
      std::size_t& cursor = cursor_[request.agent_name];
      const std::size_t index = std::min(cursor, it->second.size() - 1);
      ++cursor;
      return it->second[index];
    }
  }
  if (fallback_) {
    return fallback_->complete(request);
  }
  throw PipelineError(ErrorCode::ProviderError,
                      "no scripted response for agent '" + request.agent_name +
                          "'");
}

SyntheticMockProvider::SyntheticMockProvider(std::uint64_t seed)
    : seed_(seed) {}

namespace {

std::string short_hash(std::initializer_list<std::string_view> parts) {
  return sha256_hex(parts).substr(0, 12);
}

std::vector<std::string> scan_entry_ids(const std::string& prompt) {
  static const std::regex marker(R"(\[entry_id: ([^\]\n]+)\])");
  std::vector<std::string> ids;
  auto begin = std::sregex_iterator(prompt.begin(), prompt.end(), marker);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    ids.push_back((*it)[1].str());
  }
  return ids;
}

}  // namespace

std::string SyntheticMockProvider::complete(const AgentRequest& request) {
  count_call();
  const std::string seed_str = std::to_string(seed_);
  const std::string h =
      short_hash({seed_str, request.agent_name, request.prompt});
  const std::string& agent = request.agent_name;

  ordered_json doc;
  if (agent == "extract_problem") {
    doc["problem_statement"] =
        "How to address the central challenge characterized by trace " + h;
  } else if (agent == "extract_ideation") {
    doc["name"] = "Method-" + h;
    doc["original_problem"] = "Original problem framing " + h;
    doc["key_mechanism"] = "Key mechanism " + h;
    doc["novel_insight"] = "Novel insight " + h;
    ordered_json levels;
    for (const char* level : {"L1", "L2", "L3", "L4"}) {
      levels[level] = std::string(level) + " framing " +
                      short_hash({seed_str, h, level});
    }
    doc["levels"] = std::move(levels);
  } else if (agent == "analyze_problem") {
    ordered_json structures = ordered_json::array();
    for (int k = 1; k <= 3; ++k) {
      const std::string ks = std::to_string(k);
      ordered_json structure;
      structure["perspective"] = "perspective-" + ks;
      ordered_json levels;
      for (const char* level : {"L1", "L2", "L3", "L4"}) {
        levels[level] = "structure " + ks + " " + level + " framing " +
                        short_hash({seed_str, h, ks, level});
      }
      structure["levels"] = std::move(levels);
      structures.push_back(std::move(structure));
    }
    doc["structures"] = std::move(structures);
  } else if (agent == "analyze_level") {
    ordered_json breakdowns = ordered_json::array();
    for (const std::string& id : scan_entry_ids(request.prompt)) {
      ordered_json component;
      component["mechanism"] =
          "core mechanism of " + id + " " + short_hash({seed_str, h, id, "m"});
      component["cross_domain_application"] =
          "cross-domain use of " + id + " " +
          short_hash({seed_str, h, id, "x"});
      component["building_block_assessment"] =
          "building-block fit of " + id + " " +
          short_hash({seed_str, h, id, "b"});
      ordered_json breakdown;
      breakdown["entry_id"] = id;
      breakdown["components"] = ordered_json::array({std::move(component)});
      breakdowns.push_back(std::move(breakdown));
    }
    doc["breakdowns"] = std::move(breakdowns);
  } else if (agent == "integrate_idea" || agent == "generate_baseline") {
    const std::string tag = (agent == "integrate_idea") ? "integrated" : "baseline";
    doc["problem_structure"] = tag + " problem structure " + h;
    doc["design_rationale"] = tag + " design rationale " + h;
    doc["universal_principle"] = tag + " universal principle " + h;
    doc["key_mechanism"] = tag + " key mechanism " + h;
  } else if (agent == "extract_target_fields") {
    doc["problem_structure"] = "target problem structure " + h;
    doc["design_rationale"] = "target design rationale " + h;
    doc["universal_principle"] = "target universal principle " + h;
    doc["key_mechanism"] = "target key mechanism " + h;
  } else {
    throw PipelineError(ErrorCode::ProviderError,
                        "synthetic mock has no recipe for agent '" + agent +
                            "'");
  }
  return doc.dump();
}

HttpLlmProvider::HttpLlmProvider(std::string base_url, std::string api_key,
                                 std::string model_id)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      model_id_(std::move(model_id)) {}

std::string HttpLlmProvider::complete(const AgentRequest& request) {
  count_call();
  json body;
  body["model"] = model_id_;
  body["messages"] = json::array(
      {json{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature.value_or(0.0);

  const json reply =
      http_post_json(base_url_, "/chat/completions", api_key_, body);
  try {
    return reply.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const std::exception& e) {
    throw PipelineError(ErrorCode::ProviderError,
                        std::string("unexpected completion shape: ") + e.what());
  }
}

LlmGateway::LlmGateway(std::shared_ptr<LlmProvider> provider,
                       SchemaRegistry schemas, GatewayOptions options)
    : provider_(std::move(provider)),
      schemas_(std::move(schemas)),
      options_(options) {}

namespace {

bool is_retriable(ErrorCode code) {
  switch (code) {
    case ErrorCode::ProviderError:
    case ErrorCode::ReplayMiss:
    case ErrorCode::SchemaUnknown:
    case ErrorCode::IoError:
      return false;
    default:
      return true;
  }
}

std::string repair_suffix(const std::string& error_message,
                          const std::string& previous_raw) {
  return "\n\nYour previous reply was rejected: " + error_message +
         "\nPrevious reply:\n" + previous_raw +
         "\n\nReply again with ONLY a valid JSON object that satisfies the "
         "required format.";
}

}  // namespace

AgentResponse LlmGateway::complete_structured(const AgentRequest& request) {
  if (is_blank(request.prompt)) {
    throw PipelineError(ErrorCode::EmptyInput,
                        "agent '" + request.agent_name + "' given blank prompt");
  }
  if (!schemas_.contains(request.response_schema_id)) {
    throw PipelineError(ErrorCode::SchemaUnknown,
                        "no schema registered under '" +
                            request.response_schema_id + "'");
  }

  struct SlotGuard {
    LlmGateway& gateway;
    explicit SlotGuard(LlmGateway& g) : gateway(g) {
      std::unique_lock<std::mutex> lock(g.mutex_);
      g.slot_available_.wait(lock, [&] {
        return g.in_flight_ < g.options_.max_in_flight;
      });
      ++g.in_flight_;
    }
    ~SlotGuard() {
      {
        std::lock_guard<std::mutex> lock(gateway.mutex_);
        --gateway.in_flight_;
      }
      gateway.slot_available_.notify_one();
    }
  } slot(*this);

  {
    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_by_agent_[request.agent_name];
  }

  const int total_attempts =
      request.max_retries.value_or(options_.max_retries) + 1;
  std::string prompt = request.prompt;
  ErrorCode last_code = ErrorCode::MalformedResponse;
  std::string last_message;

  for (int attempt = 1; attempt <= total_attempts; ++attempt) {
    AgentRequest attempt_request = request;
    attempt_request.prompt = prompt;
    attempt_request.temperature =
        request.temperature.value_or(options_.temperature);
    const std::string raw = provider_->complete(attempt_request);
    try {
      json doc = extract_json_object(raw);
      schemas_.validate(request.response_schema_id, doc);
      if (request.validate_extra) {
        request.validate_extra(doc);
      }
      return AgentResponse{std::move(doc), raw, attempt};
    } catch (const PipelineError& e) {
      if (!is_retriable(e.code())) {
        throw;
      }
      last_code = e.code();
      last_message = e.what();
      prompt = request.prompt + repair_suffix(last_message, raw);
    }
  }
  throw GatewayError(last_code, last_message, total_attempts);
}

std::size_t LlmGateway::total_calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::size_t total = 0;
  for (const auto& [agent, count] : calls_by_agent_) {
    total += count;
  }
  return total;
}

std::size_t LlmGateway::calls_for(const std::string& agent_name) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = calls_by_agent_.find(agent_name);
  return it == calls_by_agent_.end() ? 0 : it->second;
}

}  // namespace ccpipe
