#include "ccpipe/retrieval.hpp"

#include <algorithm>

#include "ccpipe/errors.hpp"
#include "ccpipe/prompts.hpp"
#include "ccpipe/util.hpp"

namespace ccpipe {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<RetrievalMatch> RetrievalResult::matches_at(Level level) const {
  std::vector<RetrievalMatch> out;
  for (const auto& match : matches) {
    if (match.level == level) {
      out.push_back(match);
    }
  }
  return out;
}

int RetrievalConfig::target_structures() const {
  return std::clamp(3, min_structures, max_structures);
}

namespace {

std::string require_response_string(const json& doc, std::string_view field) {
  auto it = doc.find(field);
  if (it == doc.end() || !it->is_string() ||
      is_blank(it->get_ref<const std::string&>())) {
    throw PipelineError(ErrorCode::MalformedResponse,
                        "response field '" + std::string(field) +
                            "' is absent, non-string, or blank");
  }
  return trim_copy(it->get_ref<const std::string&>());
}

LevelTexts require_response_levels(const json& doc) {
  auto it = doc.find("levels");
  if (it == doc.end() || !it->is_object()) {
    throw PipelineError(ErrorCode::MalformedResponse,
                        "response field 'levels' is absent or not an object");
  }
  LevelTexts texts;
  for (Level l : all_levels()) {
    auto level_it = it->find(level_name(l));
    if (level_it == it->end() || !level_it->is_string() ||
        is_blank(level_it->get_ref<const std::string&>())) {
      throw PipelineError(ErrorCode::MalformedResponse,
                          "response level " + std::string(level_name(l)) +
                              " is absent, non-string, or blank");
    }
    texts[static_cast<int>(l)] = trim_copy(level_it->get_ref<const std::string&>());
  }
  return texts;
}

}  // namespace

void register_retrieval_schemas(SchemaRegistry& registry,
                                const RetrievalConfig& config) {
  registry.add("problem_statement", [](const json& doc) {
    require_response_string(doc, "problem_statement");
  });

  // Reuses the ideation-format validation (lenient on extra keys since this
  // is model output); a placeholder entry_id keeps that check out of scope
  // here because the caller assigns real ids.
  registry.add("ideation_entry", [](const json& doc) {
    json copy = doc;
    copy["entry_id"] = "pending";
    validate_entry(copy, KeyPolicy::Lenient);
  });

  const int min_structures = config.min_structures;
  registry.add("problem_analysis", [min_structures](const json& doc) {
    auto it = doc.find("structures");
    if (it == doc.end() || !it->is_array()) {
      throw PipelineError(ErrorCode::MalformedResponse,
                          "response field 'structures' is absent or not an "
                          "array");
    }
    if (static_cast<int>(it->size()) < min_structures) {
      throw PipelineError(ErrorCode::TooFewStructures,
                          "analysis returned " + std::to_string(it->size()) +
                              " structures, need at least " +
                              std::to_string(min_structures));
    }
    for (const auto& structure : *it) {
      require_response_string(structure, "perspective");
      require_response_levels(structure);
    }
  });
}

ordered_json analysis_to_json(const ProblemAnalysis& analysis) {
  ordered_json out;
  ordered_json problem;
  problem["statement_id"] = analysis.problem.statement_id;
  problem["text"] = analysis.problem.text;
  if (analysis.problem.source_ref) {
    problem["source_ref"] = *analysis.problem.source_ref;
  }
  out["problem"] = std::move(problem);
  out["structures"] = ordered_json::array();
  for (const auto& structure : analysis.structures) {
    ordered_json s;
    s["structure_id"] = structure.structure_id;
    s["perspective"] = structure.perspective;
    ordered_json levels;
    for (Level l : all_levels()) {
      levels[std::string(level_name(l))] = structure.level(l);
    }
    s["levels"] = std::move(levels);
    out["structures"].push_back(std::move(s));
  }
  return out;
}

ordered_json retrieval_result_to_json(const RetrievalResult& result) {
  ordered_json out;
  out["analysis"] = analysis_to_json(result.analysis);
  out["matches"] = ordered_json::array();
  for (const auto& match : result.matches) {
    ordered_json m;
    m["structure_id"] = match.structure_id;
    m["level"] = std::string(level_name(match.level));
    m["entry_id"] = match.entry_id;
    m["score"] = match.score;
    out["matches"].push_back(std::move(m));
  }
  return out;
}

Retriever::Retriever(LlmGateway& gateway, Embedder& embedder,
                     RetrievalConfig config)
    : gateway_(gateway), embedder_(embedder), config_(config) {}

ProblemStatement Retriever::extract_problem(const std::string& paper_text,
                                            const std::string& statement_id) {
  if (is_blank(paper_text)) {
    throw PipelineError(ErrorCode::EmptyInput, "paper text is blank");
  }
  AgentRequest request;
  request.agent_name = "extract_problem";
  request.response_schema_id = "problem_statement";
  request.prompt =
      prompts::render(prompts::kExtractProblem, {{"paper_text", paper_text}});

  const AgentResponse response = gateway_.complete_structured(request);
  ProblemStatement statement;
  statement.statement_id = statement_id;
  statement.text =
      trim_copy(response.document.at("problem_statement").get<std::string>());
  return statement;
}

InnovationEntry Retriever::extract_ideation(const std::string& paper_text,
                                            const std::string& entry_id) {
  if (is_blank(paper_text)) {
    throw PipelineError(ErrorCode::EmptyInput, "paper text is blank");
  }
  AgentRequest request;
  request.agent_name = "extract_ideation";
  request.response_schema_id = "ideation_entry";
  request.prompt =
      prompts::render(prompts::kExtractIdeation, {{"paper_text", paper_text}});

  const AgentResponse response = gateway_.complete_structured(request);
  json doc = response.document;
  doc["entry_id"] = entry_id;
  return validate_entry(doc, KeyPolicy::Lenient);
}

ProblemAnalysis Retriever::analyze_problem(const ProblemStatement& problem) {
  if (is_blank(problem.text)) {
    throw PipelineError(ErrorCode::EmptyInput, "problem statement is blank");
  }
  AgentRequest request;
  request.agent_name = "analyze_problem";
  request.response_schema_id = "problem_analysis";
  request.prompt = prompts::render(
      prompts::kAnalyzeProblem,
      {{"problem_text", problem.text},
       {"target_structures", std::to_string(config_.target_structures())},
       {"min_structures", std::to_string(config_.min_structures)},
       {"max_structures", std::to_string(config_.max_structures)}});

  const AgentResponse response = gateway_.complete_structured(request);

  ProblemAnalysis analysis;
  analysis.problem = problem;
  const auto& structures = response.document.at("structures");
  const std::size_t keep = std::min<std::size_t>(
      structures.size(), static_cast<std::size_t>(config_.max_structures));
  for (std::size_t i = 0; i < keep; ++i) {
    ProblemStructure structure;
    structure.structure_id = "s" + std::to_string(i + 1);
    structure.perspective =
        trim_copy(structures[i].at("perspective").get<std::string>());
    for (Level l : all_levels()) {
      structure.level(l) = trim_copy(
          structures[i].at("levels").at(std::string(level_name(l)))
              .get<std::string>());
    }
    analysis.structures.push_back(std::move(structure));
  }
  return analysis;
}

RetrievalResult Retriever::match_per_level(const ProblemAnalysis& analysis,
                                           const Corpus& corpus) const {
  if (corpus.entries.empty()) {
    throw PipelineError(ErrorCode::EmptyCorpus,
                        "corpus '" + corpus.corpus_id + "' has no entries");
  }
  if (analysis.structures.empty()) {
    throw PipelineError(ErrorCode::EmptyInput, "analysis has no structures");
  }

  RetrievalResult result;
  result.analysis = analysis;

  for (Level level : all_levels()) {
    std::vector<std::string> entry_texts;
    entry_texts.reserve(corpus.entries.size());
    for (const auto& entry : corpus.entries) {
      entry_texts.push_back(level_text(entry, level));
    }
    const auto entry_vectors = embedder_.embed_batch(entry_texts);

    std::vector<std::string> structure_texts;
    structure_texts.reserve(analysis.structures.size());
    for (const auto& structure : analysis.structures) {
      structure_texts.push_back(structure.level(level));
    }
    const auto structure_vectors = embedder_.embed_batch(structure_texts);

    for (std::size_t s = 0; s < analysis.structures.size(); ++s) {
      std::vector<std::size_t> order(corpus.entries.size());
      std::vector<double> scores(corpus.entries.size());
      for (std::size_t e = 0; e < corpus.entries.size(); ++e) {
        order[e] = e;
        scores[e] = cosine(structure_vectors[s], entry_vectors[e]);
      }
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) {
                  if (scores[a] != scores[b]) {
                    return scores[a] > scores[b];
                  }
                  return corpus.entries[a].entry_id < corpus.entries[b].entry_id;
                });

      const std::size_t keep = std::min<std::size_t>(
          order.size(), static_cast<std::size_t>(std::max(config_.top_k, 1)));
      for (std::size_t rank = 0; rank < keep; ++rank) {
        const std::size_t e = order[rank];
        if (config_.min_score && scores[e] < *config_.min_score) {
          continue;
        }
        result.matches.push_back({analysis.structures[s].structure_id, level,
                                  corpus.entries[e].entry_id, scores[e]});
      }
    }
  }
  return result;
}

RetrievalResult Retriever::run_retrieval(const ProblemStatement& problem,
                                         const Corpus& corpus) {
  if (corpus.entries.empty()) {
    throw PipelineError(ErrorCode::EmptyCorpus,
                        "corpus '" + corpus.corpus_id + "' has no entries");
  }
  const ProblemAnalysis analysis = analyze_problem(problem);
  return match_per_level(analysis, corpus);
}

}  // namespace ccpipe
