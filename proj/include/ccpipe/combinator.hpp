#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccpipe/ideation_store.hpp"
#include "ccpipe/llm_gateway.hpp"
#include "ccpipe/retrieval.hpp"

namespace ccpipe {

// One innovation decomposed through the three analysis perspectives.
struct BreakdownComponent {
  std::string mechanism;
  std::string cross_domain_application;
  std::string building_block_assessment;

  bool operator==(const BreakdownComponent&) const = default;
};

struct ComponentBreakdown {
  std::string entry_id;
  std::vector<BreakdownComponent> components;

  bool operator==(const ComponentBreakdown&) const = default;
};

struct LevelAnalysis {
  Level level = Level::L1;
  std::vector<ComponentBreakdown> breakdowns;

  bool empty() const { return breakdowns.empty(); }

  bool operator==(const LevelAnalysis&) const = default;
};

// Four-aspect output shared by the framework and the baseline generator.
// provenance lists the stored entry ids consulted (empty for the baseline).
struct GeneratedIdea {
  std::string problem_structure;
  std::string design_rationale;
  std::string universal_principle;
  std::string key_mechanism;
  std::vector<std::string> provenance;  // sorted, unique

  bool operator==(const GeneratedIdea&) const = default;
};

struct CombinatorConfig {
  int n_candidates = 1;            // extra integration passes, first returned
  bool include_raw_entries = false;  // add full stored records to stage 2
  bool parallel_stage1 = false;
};

// Schemas owned by this module: level_analysis, generated_idea. Both the
// framework and the baseline validate against the same generated_idea schema.
void register_combinator_schemas(SchemaRegistry& registry);

nlohmann::ordered_json idea_to_json(const GeneratedIdea& idea);
GeneratedIdea idea_from_json(const nlohmann::json& doc);
nlohmann::ordered_json level_analysis_to_json(const LevelAnalysis& analysis);

// Audit bundle directory for one run. Artifacts are written as soon as a
// stage completes so a failed run preserves everything finished before it.
class RunWriter {
 public:
  explicit RunWriter(std::filesystem::path dir);

  void write_json(const std::string& filename, const nlohmann::json& doc);
  void write_transcript(const Transcript& transcript);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// Two-stage combination: per-level decomposition of the retrieved
// innovations, then a single integration pass over the collected analyses.
class IdeaGenerator {
 public:
  IdeaGenerator(LlmGateway& gateway, Retriever& retriever,
                CombinatorConfig config);

  // One gateway call batching every innovation matched at this level (none
  // when matches is empty). Breakdown entry ids must be a subset of the
  // matched ids.
  LevelAnalysis stage1_analyze_level(Level level,
                                     const std::vector<RetrievalMatch>& matches,
                                     const Corpus& corpus);

  // Single gateway call over all non-empty analyses, assembled in L1..L4
  // order; provenance is the union of breakdown entry ids.
  GeneratedIdea stage2_integrate(const ProblemStatement& problem,
                                 const std::vector<LevelAnalysis>& analyses);

  // Full pipeline: retrieval, stage 1 per level, stage 2. Emits the audit
  // bundle through `audit` when given.
  GeneratedIdea generate_idea(const ProblemStatement& problem,
                              const Corpus& corpus, RunWriter* audit = nullptr);

  // Direct generation from the problem statement alone: one gateway call,
  // no retrieval, same output schema, empty provenance.
  GeneratedIdea generate_baseline(const ProblemStatement& problem);

  const CombinatorConfig& config() const { return config_; }

 private:
  GeneratedIdea integrate_once(const ProblemStatement& problem,
                               const std::vector<LevelAnalysis>& analyses,
                               const Corpus* corpus, int candidate_index);

  LlmGateway& gateway_;
  Retriever& retriever_;
  CombinatorConfig config_;
};

}  // namespace ccpipe
