#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccpipe/embedding.hpp"
#include "ccpipe/ideation_store.hpp"
#include "ccpipe/llm_gateway.hpp"

namespace ccpipe {

struct ProblemStatement {
  std::string statement_id;
  std::string text;
  std::optional<std::string> source_ref;

  bool operator==(const ProblemStatement&) const = default;
};

// One perspective-specific decomposition of a problem, expressed at all four
// generalization levels (mirroring the stored-innovation format).
struct ProblemStructure {
  std::string structure_id;
  std::string perspective;
  LevelTexts levels;

  const std::string& level(Level l) const {
    return levels[static_cast<int>(l)];
  }
  std::string& level(Level l) { return levels[static_cast<int>(l)]; }

  bool operator==(const ProblemStructure&) const = default;
};

struct ProblemAnalysis {
  ProblemStatement problem;
  std::vector<ProblemStructure> structures;

  bool operator==(const ProblemAnalysis&) const = default;
};

struct RetrievalMatch {
  std::string structure_id;
  Level level = Level::L1;
  std::string entry_id;
  double score = 0.0;

  bool operator==(const RetrievalMatch&) const = default;
};

struct RetrievalResult {
  ProblemAnalysis analysis;
  std::vector<RetrievalMatch> matches;

  std::vector<RetrievalMatch> matches_at(Level level) const;

  bool operator==(const RetrievalResult&) const = default;
};

struct RetrievalConfig {
  int min_structures = 2;
  int max_structures = 5;
  int top_k = 1;
  std::optional<double> min_score;

  // Structure count requested in the analysis prompt: 3 clamped into
  // [min_structures, max_structures].
  int target_structures() const;
};

// Schemas owned by this module: problem_statement, ideation_entry,
// problem_analysis. The analysis validator enforces the configured minimum
// structure count so the gateway's repair loop can react to it.
void register_retrieval_schemas(SchemaRegistry& registry,
                                const RetrievalConfig& config);

nlohmann::ordered_json analysis_to_json(const ProblemAnalysis& analysis);
nlohmann::ordered_json retrieval_result_to_json(const RetrievalResult& result);

// Level-wise retrieval: problem analysis into structures x levels, per-level
// embedding of both sides, exhaustive cosine scoring, and top-k selection
// per (structure, level) with an optional score filter.
class Retriever {
 public:
  Retriever(LlmGateway& gateway, Embedder& embedder, RetrievalConfig config);

  ProblemStatement extract_problem(const std::string& paper_text,
                                   const std::string& statement_id = "p1");

  InnovationEntry extract_ideation(const std::string& paper_text,
                                   const std::string& entry_id);

  ProblemAnalysis analyze_problem(const ProblemStatement& problem);

  // For each (structure, level): embeds the structure's level text and every
  // entry's canonical level text, scores by cosine, selects the argmax with
  // ties broken by ascending entry_id, and drops matches below min_score.
  RetrievalResult match_per_level(const ProblemAnalysis& analysis,
                                  const Corpus& corpus) const;

  RetrievalResult run_retrieval(const ProblemStatement& problem,
                                const Corpus& corpus);

  const RetrievalConfig& config() const { return config_; }

 private:
  LlmGateway& gateway_;
  Embedder& embedder_;
  RetrievalConfig config_;
};

}  // namespace ccpipe
