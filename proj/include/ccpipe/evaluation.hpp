#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccpipe/combinator.hpp"
#include "ccpipe/embedding.hpp"
#include "ccpipe/retrieval.hpp"

namespace ccpipe {

// The four aspects of the target paper that generated ideas are compared
// against, in the same vocabulary as GeneratedIdea.
struct TargetFields {
  std::string problem_structure;
  std::string design_rationale;
  std::string universal_principle;
  std::string key_mechanism;

  bool operator==(const TargetFields&) const = default;
};

struct BenchmarkCase {
  std::string case_id;
  std::string paper_text;                       // may be empty when
  std::optional<TargetFields> target_fields;    // pre-extracted fields given
  std::optional<std::string> problem_text;      // direct problem override
  std::vector<std::string> reference_texts;     // extracted via the gateway
  std::vector<InnovationEntry> reference_entries;  // pre-built records

  std::size_t reference_count() const {
    return reference_texts.size() + reference_entries.size();
  }
};

enum class Condition { framework, baseline };
std::string_view condition_name(Condition condition);

enum class Metric { PS, DR, UP, KM };
inline constexpr std::array<Metric, 4> all_metrics() {
  return {Metric::PS, Metric::DR, Metric::UP, Metric::KM};
}
std::string_view metric_name(Metric metric);

// Field-wise cosine similarities for one generated-vs-target pair.
struct SimilarityReport {
  std::string case_id;
  Condition condition = Condition::framework;
  double ps_sim = 0.0;
  double dr_sim = 0.0;
  double up_sim = 0.0;
  double km_sim = 0.0;

  double metric(Metric m) const;
  // Mean of all four field similarities; drives the overall scatter view.
  double overall_mean() const;
};

struct CaseResult {
  std::string case_id;
  SimilarityReport framework;
  SimilarityReport baseline;
};

struct CaseError {
  std::string case_id;
  std::string message;
};

struct BenchmarkReport {
  std::vector<CaseResult> per_case;
  std::vector<CaseError> errors;

  double mean(Metric metric, Condition condition) const;
};

nlohmann::ordered_json similarity_report_to_json(const SimilarityReport& report);
SimilarityReport similarity_report_from_json(const nlohmann::json& doc);

// Benchmark input file: {"cases": [{"case_id", "paper_text" | "target_fields",
// "problem_text"?, "references": [<text> | <entry>...]}]}. Enforces 1..8
// references per case; counts outside 3..5 get a stderr warning only.
std::vector<BenchmarkCase> load_benchmark(const std::filesystem::path& path);

// Schema owned by this module: target_fields.
void register_evaluation_schemas(SchemaRegistry& registry);

struct EvalConfig {
  int case_parallelism = 1;
};

// Benchmark harness: per case builds the reference corpus, runs the framework
// and the baseline, extracts target fields, and scores both with the
// evaluation embedder (configured independently of the retrieval embedder).
class Evaluator {
 public:
  Evaluator(LlmGateway& gateway, Retriever& retriever, IdeaGenerator& generator,
            Embedder& evaluation_embedder, EvalConfig config = {});

  TargetFields extract_target_fields(const std::string& paper_text);

  // Pre-extracted fields pass through verbatim with no gateway call.
  TargetFields target_fields_for(const BenchmarkCase& benchmark_case);

  SimilarityReport field_similarity(const GeneratedIdea& generated,
                                    const TargetFields& target,
                                    Condition condition,
                                    const std::string& case_id);

  CaseResult run_case(const BenchmarkCase& benchmark_case,
                      const std::filesystem::path& case_dir);

  // Resumable: a case whose report.json already exists under
  // run_dir/cases/<case_id>/ is loaded, not rerun. Per-case failures are
  // recorded; throws BenchmarkFailed only if every case fails.
  BenchmarkReport run_benchmark(const std::vector<BenchmarkCase>& cases,
                                const std::filesystem::path& run_dir);

  // Rebuilds a report from stored per-case results (cases_manifest.json plus
  // cases/<id>/report.json) without running anything.
  static BenchmarkReport aggregate_from_dir(const std::filesystem::path& run_dir);

  // Writes benchmark_report.json plus the plot-ready series: scatter.csv
  // (per-case overall means), bars.csv (DR/UP/KM mean bars), and
  // series_{ps,dr,up,km}.csv (per-case aligned score pairs).
  static void emit_report(const BenchmarkReport& report,
                          const std::filesystem::path& out_dir);

 private:
  Corpus build_case_corpus(const BenchmarkCase& benchmark_case);
  ProblemStatement problem_for(const BenchmarkCase& benchmark_case);

  LlmGateway& gateway_;
  Retriever& retriever_;
  IdeaGenerator& generator_;
  Embedder& evaluation_embedder_;
  EvalConfig config_;
};

}  // namespace ccpipe
