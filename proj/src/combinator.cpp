#include "ccpipe/combinator.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <sstream>

#include "ccpipe/errors.hpp"
#include "ccpipe/prompts.hpp"
#include "ccpipe/util.hpp"

namespace ccpipe {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string_view level_gloss(Level level) {
  switch (level) {
    case Level::L1: return "domain-specific implementation";
    case Level::L2: return "generalized beyond the immediate technique";
    case Level::L3: return "broadly transferable formulation";
    case Level::L4: return "universal principle";
  }
  return "";
}

std::string require_idea_string(const json& doc, std::string_view field) {
  auto it = doc.find(field);
  if (it == doc.end() || !it->is_string() ||
      is_blank(it->get_ref<const std::string&>())) {
    throw PipelineError(ErrorCode::MalformedResponse,
                        "response field '" + std::string(field) +
                            "' is absent, non-string, or blank");
  }
  return trim_copy(it->get_ref<const std::string&>());
}

std::string entry_block(const InnovationEntry& entry) {
  std::ostringstream out;
  out << "[entry_id: " << entry.entry_id << "]\n"
      << "name: " << entry.name << "\n"
      << "original_problem: " << entry.original_problem << "\n"
      << "key_mechanism: " << entry.key_mechanism << "\n"
      << "novel_insight: " << entry.novel_insight << "\n";
  for (Level l : all_levels()) {
    out << level_name(l) << ": " << entry.level(l) << "\n";
  }
  return out.str();
}

}  // namespace

void register_combinator_schemas(SchemaRegistry& registry) {
  registry.add("level_analysis", [](const json& doc) {
    auto it = doc.find("breakdowns");
    if (it == doc.end() || !it->is_array()) {
      throw PipelineError(ErrorCode::MalformedResponse,
                          "response field 'breakdowns' is absent or not an "
                          "array");
    }
    for (const auto& breakdown : *it) {
      require_idea_string(breakdown, "entry_id");
      auto components = breakdown.find("components");
      if (components == breakdown.end() || !components->is_array() ||
          components->empty()) {
        throw PipelineError(ErrorCode::MalformedResponse,
                            "breakdown needs a non-empty 'components' array");
      }
      for (const auto& component : *components) {
        require_idea_string(component, "mechanism");
        require_idea_string(component, "cross_domain_application");
        require_idea_string(component, "building_block_assessment");
      }
    }
  });

  registry.add("generated_idea", [](const json& doc) {
    require_idea_string(doc, "problem_structure");
    require_idea_string(doc, "design_rationale");
    require_idea_string(doc, "universal_principle");
    require_idea_string(doc, "key_mechanism");
  });
}

ordered_json idea_to_json(const GeneratedIdea& idea) {
  ordered_json out;
  out["problem_structure"] = idea.problem_structure;
  out["design_rationale"] = idea.design_rationale;
  out["universal_principle"] = idea.universal_principle;
  out["key_mechanism"] = idea.key_mechanism;
  out["provenance"] = idea.provenance;
  return out;
}

GeneratedIdea idea_from_json(const json& doc) {
  GeneratedIdea idea;
  idea.problem_structure = require_idea_string(doc, "problem_structure");
  idea.design_rationale = require_idea_string(doc, "design_rationale");
  idea.universal_principle = require_idea_string(doc, "universal_principle");
  idea.key_mechanism = require_idea_string(doc, "key_mechanism");
  if (auto it = doc.find("provenance"); it != doc.end() && it->is_array()) {
    for (const auto& id : *it) {
      idea.provenance.push_back(id.get<std::string>());
    }
  }
  return idea;
}

ordered_json level_analysis_to_json(const LevelAnalysis& analysis) {
  ordered_json out;
  out["level"] = std::string(level_name(analysis.level));
  out["breakdowns"] = ordered_json::array();
  for (const auto& breakdown : analysis.breakdowns) {
    ordered_json b;
    b["entry_id"] = breakdown.entry_id;
    b["components"] = ordered_json::array();
    for (const auto& component : breakdown.components) {
      ordered_json c;
      c["mechanism"] = component.mechanism;
      c["cross_domain_application"] = component.cross_domain_application;
      c["building_block_assessment"] = component.building_block_assessment;
      b["components"].push_back(std::move(c));
    }
    out["breakdowns"].push_back(std::move(b));
  }
  return out;
}

RunWriter::RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw PipelineError(ErrorCode::IoError,
                        "cannot create run dir " + dir_.string() + ": " +
                            ec.message());
  }
}

void RunWriter::write_json(const std::string& filename, const json& doc) {
  write_text_file(dir_ / filename, doc.dump(2) + "\n");
}

void RunWriter::write_transcript(const Transcript& transcript) {
  transcript.save(dir_ / "transcript.jsonl");
}

IdeaGenerator::IdeaGenerator(LlmGateway& gateway, Retriever& retriever,
                             CombinatorConfig config)
    : gateway_(gateway), retriever_(retriever), config_(config) {}

LevelAnalysis IdeaGenerator::stage1_analyze_level(
    Level level, const std::vector<RetrievalMatch>& matches,
    const Corpus& corpus) {
  LevelAnalysis analysis;
  analysis.level = level;
  if (matches.empty()) {
    return analysis;  // nothing to analyze: no gateway call
  }

  std::set<std::string> unique_ids;
  for (const auto& match : matches) {
    if (match.level != level) {
      throw PipelineError(ErrorCode::ConfigError,
                          "match for structure '" + match.structure_id +
                              "' is not at level " +
                              std::string(level_name(level)));
    }
    unique_ids.insert(match.entry_id);
  }

  std::ostringstream entries_block;
  for (const auto& id : unique_ids) {
    const InnovationEntry* entry = corpus.find(id);
    if (entry == nullptr) {
      throw PipelineError(ErrorCode::UnknownEntry,
                          "matched entry '" + id + "' not in corpus '" +
                              corpus.corpus_id + "'");
    }
    entries_block << entry_block(*entry) << "\n";
  }

  AgentRequest request;
  request.agent_name = "analyze_level";
  request.response_schema_id = "level_analysis";
  request.prompt = prompts::render(
      prompts::kAnalyzeLevel,
      {{"level", std::string(level_name(level))},
       {"level_gloss", std::string(level_gloss(level))},
       {"entries", entries_block.str()}});
  request.validate_extra = [&unique_ids](const json& doc) {
    for (const auto& breakdown : doc.at("breakdowns")) {
      const auto id = breakdown.at("entry_id").get<std::string>();
      if (!unique_ids.count(id)) {
        throw PipelineError(ErrorCode::UnknownEntry,
                            "breakdown names entry '" + id +
                                "' which was not retrieved at this level");
      }
    }
  };

  const AgentResponse response = gateway_.complete_structured(request);
  for (const auto& raw : response.document.at("breakdowns")) {
    ComponentBreakdown breakdown;
    breakdown.entry_id = raw.at("entry_id").get<std::string>();
    for (const auto& raw_component : raw.at("components")) {
      breakdown.components.push_back(
          {trim_copy(raw_component.at("mechanism").get<std::string>()),
           trim_copy(
               raw_component.at("cross_domain_application").get<std::string>()),
           trim_copy(raw_component.at("building_block_assessment")
                         .get<std::string>())});
    }
    analysis.breakdowns.push_back(std::move(breakdown));
  }
  return analysis;
}

GeneratedIdea IdeaGenerator::integrate_once(
    const ProblemStatement& problem, const std::vector<LevelAnalysis>& analyses,
    const Corpus* corpus, int candidate_index) {
  std::vector<LevelAnalysis> ordered = analyses;
  std::sort(ordered.begin(), ordered.end(),
            [](const LevelAnalysis& a, const LevelAnalysis& b) {
              return static_cast<int>(a.level) < static_cast<int>(b.level);
            });

  std::set<std::string> provenance;
  std::ostringstream analyses_block;
  for (const auto& analysis : ordered) {
    if (analysis.empty()) {
      continue;
    }
    analyses_block << level_analysis_to_json(analysis).dump(2) << "\n";
    for (const auto& breakdown : analysis.breakdowns) {
      provenance.insert(breakdown.entry_id);
    }
  }
  if (provenance.empty()) {
    throw PipelineError(ErrorCode::NoAnalyses,
                        "all level analyses are empty; nothing to integrate");
  }

  if (config_.include_raw_entries && corpus != nullptr) {
    analyses_block << "\nFull records of the innovations referenced above:\n";
    for (const auto& id : provenance) {
      if (const InnovationEntry* entry = corpus->find(id)) {
        analyses_block << entry_block(*entry) << "\n";
      }
    }
  }

  AgentRequest request;
  request.agent_name = "integrate_idea";
  request.response_schema_id = "generated_idea";
  request.prompt = prompts::render(prompts::kIntegrateIdea,
                                   {{"problem_text", problem.text},
                                    {"analyses", analyses_block.str()}});
  if (candidate_index > 0) {
    request.prompt += "\n\nProvide alternative solution candidate #" +
                      std::to_string(candidate_index + 1) +
                      ", distinct from candidates proposed before.";
  }

  const AgentResponse response = gateway_.complete_structured(request);
  GeneratedIdea idea = idea_from_json(response.document);
  idea.provenance.assign(provenance.begin(), provenance.end());
  return idea;
}

GeneratedIdea IdeaGenerator::stage2_integrate(
    const ProblemStatement& problem,
    const std::vector<LevelAnalysis>& analyses) {
  return integrate_once(problem, analyses, nullptr, 0);
}

GeneratedIdea IdeaGenerator::generate_idea(const ProblemStatement& problem,
                                           const Corpus& corpus,
                                           RunWriter* audit) {
  const RetrievalResult retrieval = retriever_.run_retrieval(problem, corpus);
  if (audit != nullptr) {
    audit->write_json("analysis.json", analysis_to_json(retrieval.analysis));
    audit->write_json("retrieval_result.json",
                      retrieval_result_to_json(retrieval));
  }

  std::vector<LevelAnalysis> analyses;
  analyses.reserve(kLevelCount);
  if (config_.parallel_stage1) {
    std::vector<std::future<LevelAnalysis>> futures;
    for (Level level : all_levels()) {
      futures.push_back(std::async(std::launch::async, [&, level] {
        return stage1_analyze_level(level, retrieval.matches_at(level), corpus);
      }));
    }
    for (auto& future : futures) {
      analyses.push_back(future.get());
    }
  } else {
    for (Level level : all_levels()) {
      analyses.push_back(
          stage1_analyze_level(level, retrieval.matches_at(level), corpus));
    }
  }
  if (audit != nullptr) {
    for (const auto& analysis : analyses) {
      audit->write_json("level_analysis_" +
                            std::string(level_name(analysis.level)) + ".json",
                        level_analysis_to_json(analysis));
    }
  }

  GeneratedIdea idea = integrate_once(problem, analyses, &corpus, 0);
  if (audit != nullptr) {
    audit->write_json("idea.json", idea_to_json(idea));
    for (int candidate = 1; candidate < config_.n_candidates; ++candidate) {
      const GeneratedIdea extra =
          integrate_once(problem, analyses, &corpus, candidate);
      audit->write_json("idea_candidate_" + std::to_string(candidate + 1) +
                            ".json",
                        idea_to_json(extra));
    }
  }
  return idea;
}

GeneratedIdea IdeaGenerator::generate_baseline(const ProblemStatement& problem) {
  if (is_blank(problem.text)) {
    throw PipelineError(ErrorCode::EmptyInput, "problem statement is blank");
  }
  AgentRequest request;
  request.agent_name = "generate_baseline";
  request.response_schema_id = "generated_idea";
  request.prompt = prompts::render(prompts::kGenerateBaseline,
                                   {{"problem_text", problem.text}});

  const AgentResponse response = gateway_.complete_structured(request);
  GeneratedIdea idea = idea_from_json(response.document);
  idea.provenance.clear();
  return idea;
}

}  // namespace ccpipe
