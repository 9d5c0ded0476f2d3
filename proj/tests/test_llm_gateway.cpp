#include "ccpipe/llm_gateway.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "ccpipe/errors.hpp"
#include "ccpipe/util.hpp"

using namespace ccpipe;
using nlohmann::json;

namespace {

const std::filesystem::path kFixtures = CCPIPE_FIXTURES_DIR;

SchemaRegistry answer_schema() {
  SchemaRegistry registry;
  registry.add("answer", [](const json& doc) {
    if (!doc.contains("answer") || !doc["answer"].is_string() ||
        doc["answer"].get<std::string>().empty()) {
      throw PipelineError(ErrorCode::MalformedResponse,
                          "response needs a non-empty string 'answer'");
    }
  });
  return registry;
}

AgentRequest answer_request(const std::string& agent = "unit_agent",
                            const std::string& prompt = "say hello") {
  AgentRequest request;
  request.agent_name = agent;
  request.prompt = prompt;
  request.response_schema_id = "answer";
  return request;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         (name + "_" + std::to_string(::getpid()) + ".jsonl");
}

}  // namespace

TEST(RequestDigest, ExcludesTemperatureIncludesPromptAndSchema) {
  AgentRequest a = answer_request();
  AgentRequest b = a;
  b.temperature = 0.9;
  EXPECT_EQ(request_digest(a), request_digest(b));

  AgentRequest c = a;
  c.prompt += "!";
  EXPECT_NE(request_digest(a), request_digest(c));

  AgentRequest d = a;
  d.response_schema_id = "other";
  EXPECT_NE(request_digest(a), request_digest(d));
}

TEST(ExtractJson, HandlesFencesAndSurroundingText) {
  EXPECT_EQ(extract_json_object(R"({"a": 1})")["a"], 1);
  EXPECT_EQ(extract_json_object("```json\n{\"a\": 2}\n```")["a"], 2);
  EXPECT_EQ(extract_json_object("Sure! Here you go: {\"a\": 3} hope it helps")
                ["a"],
            3);
  EXPECT_THROW(extract_json_object("no json here"), PipelineError);
  EXPECT_THROW(extract_json_object("[1, 2, 3]"), PipelineError);
}

TEST(Gateway, FixtureMockReturnsSchemaValidDocumentFirstAttempt) {
  auto provider = ScriptedMockProvider::from_fixture_file(
      kFixtures / "llm_fixtures.json");
  SchemaRegistry registry;
  registry.add("problem_statement", [](const json& doc) {
    if (!doc.contains("problem_statement")) {
      throw PipelineError(ErrorCode::MalformedResponse, "missing field");
    }
  });
  LlmGateway gateway(provider, std::move(registry));

  AgentRequest request;
  request.agent_name = "extract_problem";
  request.prompt = "irrelevant for the scripted mock";
  request.response_schema_id = "problem_statement";
  const AgentResponse response = gateway.complete_structured(request);
  EXPECT_EQ(response.attempts, 1);
  EXPECT_TRUE(response.document["problem_statement"].is_string());
}

TEST(Gateway, RetriesOnceOnInvalidThenValid) {
  auto provider = std::make_shared<ScriptedMockProvider>();
  provider->enqueue("unit_agent", "not json at all");
  provider->enqueue("unit_agent", R"({"answer": "fixed"})");
  LlmGateway gateway(provider, answer_schema());

  const AgentResponse response = gateway.complete_structured(answer_request());
  EXPECT_EQ(response.attempts, 2);
  EXPECT_EQ(response.document["answer"], "fixed");
  EXPECT_EQ(provider->call_count(), 2u);
}

TEST(Gateway, MalformedAfterRetriesRecordsAttempts) {
  auto provider = std::make_shared<ScriptedMockProvider>();
  provider->enqueue("unit_agent", "still not json");
  LlmGateway gateway(provider, answer_schema());

  AgentRequest request = answer_request();
  request.max_retries = 2;
  try {
    gateway.complete_structured(request);
    FAIL() << "expected MalformedResponse";
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(provider->call_count(), 3u);
}

TEST(Gateway, RepairPromptNamesTheViolation) {
  // Capture the prompts the provider actually sees.
  class CapturingProvider : public LlmProvider {
   public:
    std::vector<std::string> prompts;
    std::string complete(const AgentRequest& request) override {
      count_call();
      prompts.push_back(request.prompt);
      return prompts.size() == 1 ? R"({"wrong": true})"
                                 : R"({"answer": "ok"})";
    }
    std::string provider_id() const override { return "capturing"; }
  };
  auto provider = std::make_shared<CapturingProvider>();
  LlmGateway gateway(provider, answer_schema());

  const AgentResponse response = gateway.complete_structured(answer_request());
  EXPECT_EQ(response.attempts, 2);
  ASSERT_EQ(provider->prompts.size(), 2u);
  EXPECT_EQ(provider->prompts[0], "say hello");
  EXPECT_NE(provider->prompts[1].find("rejected"), std::string::npos);
  EXPECT_NE(provider->prompts[1].find("answer"), std::string::npos);
  EXPECT_NE(provider->prompts[1].find(R"({"wrong": true})"), std::string::npos);
}

TEST(Gateway, UnknownSchemaRejectedWithoutProviderCall) {
  auto provider = std::make_shared<ScriptedMockProvider>();
  provider->enqueue("unit_agent", R"({"answer": "x"})");
  LlmGateway gateway(provider, answer_schema());

  AgentRequest request = answer_request();
  request.response_schema_id = "unregistered";
  try {
    gateway.complete_structured(request);
    FAIL() << "expected SchemaUnknown";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaUnknown);
  }
  EXPECT_EQ(provider->call_count(), 0u);
}

TEST(Gateway, BlankPromptRejected) {
  LlmGateway gateway(std::make_shared<SyntheticMockProvider>(), answer_schema());
  AgentRequest request = answer_request("a", "   ");
  EXPECT_THROW(gateway.complete_structured(request), PipelineError);
}

TEST(Gateway, CallAccountingMatchesProvider) {
  auto provider = std::make_shared<ScriptedMockProvider>();
  provider->enqueue("alpha", R"({"answer": "a"})");
  provider->enqueue("beta", R"({"answer": "b"})");
  LlmGateway gateway(provider, answer_schema());

  gateway.complete_structured(answer_request("alpha"));
  gateway.complete_structured(answer_request("beta"));
  gateway.complete_structured(answer_request("alpha"));

  EXPECT_EQ(gateway.calls_for("alpha"), 2u);
  EXPECT_EQ(gateway.calls_for("beta"), 1u);
  EXPECT_EQ(gateway.total_calls(), 3u);
  EXPECT_EQ(provider->call_count(), gateway.total_calls());
}

TEST(Transcript, RecordThenReplayReproducesResponses) {
  auto scripted = std::make_shared<ScriptedMockProvider>();
  scripted->enqueue("alpha", R"({"answer": "one"})");
  scripted->enqueue("beta", R"({"answer": "two"})");
  scripted->enqueue("alpha", R"({"answer": "three"})");
  auto recorder = std::make_shared<RecordingProvider>(scripted);
  LlmGateway recording_gateway(recorder, answer_schema());

  const auto r1 =
      recording_gateway.complete_structured(answer_request("alpha", "p1"));
  const auto r2 =
      recording_gateway.complete_structured(answer_request("beta", "p2"));
  const auto r3 =
      recording_gateway.complete_structured(answer_request("alpha", "p1"));
  // Same digest twice: per-digest FIFO must preserve order.
  EXPECT_EQ(r1.document["answer"], "one");
  EXPECT_EQ(r3.document["answer"], "three");

  const Transcript transcript = recorder->snapshot("run-1");
  ASSERT_EQ(transcript.records.size(), 3u);

  auto replay = std::make_shared<ReplayProvider>(transcript);
  LlmGateway replay_gateway(replay, answer_schema());
  EXPECT_EQ(replay_gateway.complete_structured(answer_request("alpha", "p1"))
                .raw_text,
            r1.raw_text);
  EXPECT_EQ(replay_gateway.complete_structured(answer_request("beta", "p2"))
                .raw_text,
            r2.raw_text);
  EXPECT_EQ(replay_gateway.complete_structured(answer_request("alpha", "p1"))
                .raw_text,
            r3.raw_text);
  EXPECT_EQ(scripted->call_count(), 3u);  // replay made no inner calls
}

TEST(Transcript, SaveLoadRoundTripAndCanonicalOrder) {
  Transcript transcript;
  transcript.run_id = "t";
  transcript.records = {{"zz", "a2", "raw-z"},
                        {"aa", "a1", "raw-a1"},
                        {"aa", "a1", "raw-a2"}};
  const auto path = temp_file("transcript");
  transcript.save(path);

  const Transcript loaded = Transcript::load(path);
  ASSERT_EQ(loaded.records.size(), 3u);
  // Sorted by digest, order within a digest preserved.
  EXPECT_EQ(loaded.records[0].digest, "aa");
  EXPECT_EQ(loaded.records[0].raw_text, "raw-a1");
  EXPECT_EQ(loaded.records[1].raw_text, "raw-a2");
  EXPECT_EQ(loaded.records[2].digest, "zz");

  // Re-saving the loaded transcript is byte-identical.
  const auto path2 = temp_file("transcript2");
  loaded.save(path2);
  EXPECT_EQ(read_text_file(path), read_text_file(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST(Transcript, ReplayMissOnMutatedPrompt) {
  auto scripted = std::make_shared<ScriptedMockProvider>();
  scripted->enqueue("alpha", R"({"answer": "one"})");
  auto recorder = std::make_shared<RecordingProvider>(scripted);
  LlmGateway recording_gateway(recorder, answer_schema());
  recording_gateway.complete_structured(answer_request("alpha", "prompt"));

  auto replay =
      std::make_shared<ReplayProvider>(recorder->snapshot("run"));
  LlmGateway replay_gateway(replay, answer_schema());
  try {
    replay_gateway.complete_structured(answer_request("alpha", "mutated"));
    FAIL() << "expected ReplayMiss";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReplayMiss);
  }
}

TEST(Transcript, EmptyTranscriptMissesFirstCall) {
  Transcript empty;
  auto replay = std::make_shared<ReplayProvider>(empty);
  LlmGateway gateway(replay, answer_schema());
  try {
    gateway.complete_structured(answer_request());
    FAIL() << "expected ReplayMiss";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReplayMiss);
  }
}

TEST(SyntheticMock, DeterministicPerSeedAndInput) {
  SyntheticMockProvider a(3);
  SyntheticMockProvider b(3);
  SyntheticMockProvider c(4);

  AgentRequest request;
  request.agent_name = "extract_problem";
  request.prompt = "paper text";
  request.response_schema_id = "problem_statement";
  EXPECT_EQ(a.complete(request), b.complete(request));
  EXPECT_NE(a.complete(request), c.complete(request));

  AgentRequest other = request;
  other.prompt = "different paper text";
  EXPECT_NE(a.complete(request), a.complete(other));
}

TEST(SyntheticMock, AnalyzeLevelEchoesEntryIds) {
  SyntheticMockProvider provider(0);
  AgentRequest request;
  request.agent_name = "analyze_level";
  request.response_schema_id = "level_analysis";
  request.prompt =
      "Innovations:\n[entry_id: aaa]\nname: x\n\n[entry_id: bbb]\nname: y\n";
  const json doc = json::parse(provider.complete(request));
  ASSERT_EQ(doc["breakdowns"].size(), 2u);
  EXPECT_EQ(doc["breakdowns"][0]["entry_id"], "aaa");
  EXPECT_EQ(doc["breakdowns"][1]["entry_id"], "bbb");
}

TEST(Gateway, DefaultRetryBudgetComesFromOptions) {
  auto provider = std::make_shared<ScriptedMockProvider>();
  provider->enqueue("unit_agent", "junk");
  GatewayOptions options;
  options.max_retries = 0;
  LlmGateway gateway(provider, answer_schema(), options);

  try {
    gateway.complete_structured(answer_request());
    FAIL() << "expected GatewayError";
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.attempts(), 1);
  }
}
