#include "ccpipe/evaluation.hpp"

#include <algorithm>
#include <future>
#include <iostream>
#include <set>
#include <sstream>

#include "ccpipe/errors.hpp"
#include "ccpipe/prompts.hpp"
#include "ccpipe/util.hpp"

namespace ccpipe {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view condition_name(Condition condition) {
  return condition == Condition::framework ? "framework" : "baseline";
}

std::string_view metric_name(Metric metric) {
  switch (metric) {
    case Metric::PS: return "ps_sim";
    case Metric::DR: return "dr_sim";
    case Metric::UP: return "up_sim";
    case Metric::KM: return "km_sim";
  }
  return "";
}

double SimilarityReport::metric(Metric m) const {
  switch (m) {
    case Metric::PS: return ps_sim;
    case Metric::DR: return dr_sim;
    case Metric::UP: return up_sim;
    case Metric::KM: return km_sim;
  }
  return 0.0;
}

double SimilarityReport::overall_mean() const {
  return (ps_sim + dr_sim + up_sim + km_sim) / 4.0;
}

double BenchmarkReport::mean(Metric metric, Condition condition) const {
  if (per_case.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const auto& result : per_case) {
    const SimilarityReport& report =
        condition == Condition::framework ? result.framework : result.baseline;
    sum += report.metric(metric);
  }
  return sum / static_cast<double>(per_case.size());
}

ordered_json similarity_report_to_json(const SimilarityReport& report) {
  ordered_json out;
  out["case_id"] = report.case_id;
  out["condition"] = std::string(condition_name(report.condition));
  out["ps_sim"] = report.ps_sim;
  out["dr_sim"] = report.dr_sim;
  out["up_sim"] = report.up_sim;
  out["km_sim"] = report.km_sim;
  return out;
}

SimilarityReport similarity_report_from_json(const json& doc) {
  SimilarityReport report;
  report.case_id = doc.at("case_id").get<std::string>();
  report.condition = doc.at("condition").get<std::string>() == "baseline"
                         ? Condition::baseline
                         : Condition::framework;
  report.ps_sim = doc.at("ps_sim").get<double>();
  report.dr_sim = doc.at("dr_sim").get<double>();
  report.up_sim = doc.at("up_sim").get<double>();
  report.km_sim = doc.at("km_sim").get<double>();
  return report;
}

namespace {

std::string require_case_string(const json& obj, std::string_view field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw PipelineError(ErrorCode::MissingField,
                        "required field '" + std::string(field) + "' is absent");
  }
  if (!it->is_string()) {
    throw PipelineError(ErrorCode::ParseError,
                        "field '" + std::string(field) + "' must be a string");
  }
  std::string value = trim_copy(it->get_ref<const std::string&>());
  if (value.empty()) {
    throw PipelineError(ErrorCode::EmptyField,
                        "field '" + std::string(field) + "' is blank");
  }
  return value;
}

TargetFields target_fields_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw PipelineError(ErrorCode::ParseError,
                        "'target_fields' must be an object");
  }
  TargetFields fields;
  fields.problem_structure = require_case_string(doc, "problem_structure");
  fields.design_rationale = require_case_string(doc, "design_rationale");
  fields.universal_principle = require_case_string(doc, "universal_principle");
  fields.key_mechanism = require_case_string(doc, "key_mechanism");
  return fields;
}

ordered_json target_fields_to_json(const TargetFields& fields) {
  ordered_json out;
  out["problem_structure"] = fields.problem_structure;
  out["design_rationale"] = fields.design_rationale;
  out["universal_principle"] = fields.universal_principle;
  out["key_mechanism"] = fields.key_mechanism;
  return out;
}

BenchmarkCase case_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw PipelineError(ErrorCode::ParseError, "case is not a JSON object");
  }
  BenchmarkCase benchmark_case;
  benchmark_case.case_id = require_case_string(doc, "case_id");

  if (auto it = doc.find("paper_text"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw PipelineError(ErrorCode::ParseError,
                          "field 'paper_text' must be a string");
    }
    benchmark_case.paper_text = trim_copy(it->get_ref<const std::string&>());
  }
  if (auto it = doc.find("target_fields"); it != doc.end() && !it->is_null()) {
    benchmark_case.target_fields = target_fields_from_json(*it);
  }
  if (benchmark_case.paper_text.empty() && !benchmark_case.target_fields) {
    throw PipelineError(ErrorCode::MissingField,
                        "case needs 'paper_text' or 'target_fields'");
  }
  if (auto it = doc.find("problem_text"); it != doc.end() && !it->is_null()) {
    benchmark_case.problem_text = require_case_string(doc, "problem_text");
  }

  auto refs = doc.find("references");
  if (refs == doc.end() || !refs->is_array()) {
    throw PipelineError(ErrorCode::MissingField,
                        "required field 'references' is absent or not an array");
  }
  for (const auto& ref : *refs) {
    if (ref.is_string()) {
      const std::string text = trim_copy(ref.get_ref<const std::string&>());
      if (text.empty()) {
        throw PipelineError(ErrorCode::EmptyField, "reference text is blank");
      }
      benchmark_case.reference_texts.push_back(text);
    } else if (ref.is_object()) {
      benchmark_case.reference_entries.push_back(validate_entry(ref));
    } else {
      throw PipelineError(ErrorCode::ParseError,
                          "reference must be a text or an entry object");
    }
  }
  const std::size_t count = benchmark_case.reference_count();
  if (count < 1 || count > 8) {
    throw PipelineError(ErrorCode::ParseError,
                        "case '" + benchmark_case.case_id + "' has " +
                            std::to_string(count) +
                            " references; expected between 1 and 8");
  }
  if (count < 3 || count > 5) {
    std::cerr << "warning: case '" << benchmark_case.case_id << "' has "
              << count << " references (typical range is 3-5)\n";
  }
  return benchmark_case;
}

}  // namespace

std::vector<BenchmarkCase> load_benchmark(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw PipelineError(ErrorCode::ParseError,
                        "parse error at byte " + std::to_string(e.byte) + ": " +
                            e.what());
  }
  if (!doc.is_object()) {
    throw PipelineError(ErrorCode::ParseError,
                        "benchmark document must be a JSON object");
  }
  auto cases_it = doc.find("cases");
  if (cases_it == doc.end() || cases_it->is_null()) {
    throw PipelineError(ErrorCode::MissingField,
                        "required field 'cases' is absent");
  }
  if (!cases_it->is_array()) {
    throw PipelineError(ErrorCode::ParseError, "'cases' must be an array");
  }

  std::vector<BenchmarkCase> cases;
  std::vector<IndexedError> errors;
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < cases_it->size(); ++i) {
    try {
      BenchmarkCase benchmark_case = case_from_json((*cases_it)[i]);
      if (!seen_ids.insert(benchmark_case.case_id).second) {
        throw PipelineError(ErrorCode::DuplicateEntryId,
                            "case_id '" + benchmark_case.case_id +
                                "' repeated");
      }
      cases.push_back(std::move(benchmark_case));
    } catch (const PipelineError& e) {
      errors.push_back({i, e.code(), e.what()});
    }
  }
  if (!errors.empty()) {
    throw AggregateError(std::move(errors), "benchmark cases");
  }
  return cases;
}

void register_evaluation_schemas(SchemaRegistry& registry) {
  registry.add("target_fields", [](const json& doc) {
    for (const char* field : {"problem_structure", "design_rationale",
                              "universal_principle", "key_mechanism"}) {
      auto it = doc.find(field);
      if (it == doc.end() || !it->is_string() ||
          is_blank(it->get_ref<const std::string&>())) {
        throw PipelineError(ErrorCode::MalformedResponse,
                            "response field '" + std::string(field) +
                                "' is absent, non-string, or blank");
      }
    }
  });
}

Evaluator::Evaluator(LlmGateway& gateway, Retriever& retriever,
                     IdeaGenerator& generator, Embedder& evaluation_embedder,
                     EvalConfig config)
    : gateway_(gateway),
      retriever_(retriever),
      generator_(generator),
      evaluation_embedder_(evaluation_embedder),
      config_(config) {}

TargetFields Evaluator::extract_target_fields(const std::string& paper_text) {
  if (is_blank(paper_text)) {
    throw PipelineError(ErrorCode::EmptyInput, "paper text is blank");
  }
  AgentRequest request;
  request.agent_name = "extract_target_fields";
  request.response_schema_id = "target_fields";
  request.prompt = prompts::render(prompts::kExtractTargetFields,
                                   {{"paper_text", paper_text}});
  const AgentResponse response = gateway_.complete_structured(request);
  return target_fields_from_json(response.document);
}

TargetFields Evaluator::target_fields_for(const BenchmarkCase& benchmark_case) {
  if (benchmark_case.target_fields) {
    return *benchmark_case.target_fields;
  }
  return extract_target_fields(benchmark_case.paper_text);
}

SimilarityReport Evaluator::field_similarity(const GeneratedIdea& generated,
                                             const TargetFields& target,
                                             Condition condition,
                                             const std::string& case_id) {
  const std::array<std::pair<const std::string*, const std::string*>, 4> pairs =
      {{{&generated.problem_structure, &target.problem_structure},
        {&generated.design_rationale, &target.design_rationale},
        {&generated.universal_principle, &target.universal_principle},
        {&generated.key_mechanism, &target.key_mechanism}}};

  std::vector<std::string> texts;
  texts.reserve(8);
  for (const auto& [generated_text, target_text] : pairs) {
    if (is_blank(*generated_text) || is_blank(*target_text)) {
      throw PipelineError(ErrorCode::EmptyField,
                          "similarity inputs must have non-blank fields");
    }
    texts.push_back(*generated_text);
    texts.push_back(*target_text);
  }
  const auto vectors = evaluation_embedder_.embed_batch(texts);

  SimilarityReport report;
  report.case_id = case_id;
  report.condition = condition;
  report.ps_sim = cosine(vectors[0], vectors[1]);
  report.dr_sim = cosine(vectors[2], vectors[3]);
  report.up_sim = cosine(vectors[4], vectors[5]);
  report.km_sim = cosine(vectors[6], vectors[7]);
  return report;
}

Corpus Evaluator::build_case_corpus(const BenchmarkCase& benchmark_case) {
  Corpus corpus;
  corpus.corpus_id = benchmark_case.case_id + "-refs";

  std::set<std::string> ids;
  for (const auto& entry : benchmark_case.reference_entries) {
    if (!ids.insert(entry.entry_id).second) {
      throw PipelineError(ErrorCode::DuplicateEntryId,
                          "reference entry_id '" + entry.entry_id +
                              "' repeated");
    }
    corpus.entries.push_back(entry);
  }
  std::size_t position = benchmark_case.reference_entries.size();
  for (const auto& text : benchmark_case.reference_texts) {
    ++position;
    const std::string entry_id = "ref" + std::to_string(position);
    if (!ids.insert(entry_id).second) {
      throw PipelineError(ErrorCode::DuplicateEntryId,
                          "reference entry_id '" + entry_id + "' repeated");
    }
    corpus.entries.push_back(retriever_.extract_ideation(text, entry_id));
  }
  return corpus;
}

ProblemStatement Evaluator::problem_for(const BenchmarkCase& benchmark_case) {
  const std::string statement_id = benchmark_case.case_id + "-p";
  if (benchmark_case.problem_text) {
    return {statement_id, *benchmark_case.problem_text, std::nullopt};
  }
  if (!benchmark_case.paper_text.empty()) {
    return retriever_.extract_problem(benchmark_case.paper_text, statement_id);
  }
  // Pre-extracted fields without any problem text: the target's own problem
  // framing is the only available statement.
  return {statement_id, benchmark_case.target_fields->problem_structure,
          std::nullopt};
}

CaseResult Evaluator::run_case(const BenchmarkCase& benchmark_case,
                               const std::filesystem::path& case_dir) {
  std::error_code ec;
  std::filesystem::create_directories(case_dir, ec);
  if (ec) {
    throw PipelineError(ErrorCode::IoError,
                        "cannot create case dir " + case_dir.string() + ": " +
                            ec.message());
  }

  const Corpus corpus = build_case_corpus(benchmark_case);
  const ProblemStatement problem = problem_for(benchmark_case);

  RunWriter audit(case_dir / "audit");
  const GeneratedIdea framework_idea =
      generator_.generate_idea(problem, corpus, &audit);
  const GeneratedIdea baseline_idea = generator_.generate_baseline(problem);
  const TargetFields target = target_fields_for(benchmark_case);

  CaseResult result;
  result.case_id = benchmark_case.case_id;
  result.framework = field_similarity(framework_idea, target,
                                      Condition::framework,
                                      benchmark_case.case_id);
  result.baseline = field_similarity(baseline_idea, target, Condition::baseline,
                                     benchmark_case.case_id);

  write_text_file(case_dir / "idea.json",
                  idea_to_json(framework_idea).dump(2) + "\n");
  write_text_file(case_dir / "baseline_idea.json",
                  idea_to_json(baseline_idea).dump(2) + "\n");
  write_text_file(case_dir / "target_fields.json",
                  target_fields_to_json(target).dump(2) + "\n");

  ordered_json report;
  report["case_id"] = result.case_id;
  report["framework"] = similarity_report_to_json(result.framework);
  report["baseline"] = similarity_report_to_json(result.baseline);
  write_text_file(case_dir / "report.json", report.dump(2) + "\n");
  return result;
}

namespace {

std::optional<CaseResult> load_case_result(
    const std::filesystem::path& case_dir) {
  const auto report_path = case_dir / "report.json";
  if (!std::filesystem::exists(report_path)) {
    return std::nullopt;
  }
  try {
    const json doc = json::parse(read_text_file(report_path));
    CaseResult result;
    result.case_id = doc.at("case_id").get<std::string>();
    result.framework = similarity_report_from_json(doc.at("framework"));
    result.baseline = similarity_report_from_json(doc.at("baseline"));
    return result;
  } catch (const std::exception&) {
    return std::nullopt;  // incomplete/corrupt result: rerun the case
  }
}

}  // namespace

BenchmarkReport Evaluator::run_benchmark(const std::vector<BenchmarkCase>& cases,
                                         const std::filesystem::path& run_dir) {
  if (cases.empty()) {
    throw PipelineError(ErrorCode::EmptyInput, "benchmark has no cases");
  }
  const auto cases_root = run_dir / "cases";
  std::error_code ec;
  std::filesystem::create_directories(cases_root, ec);
  if (ec) {
    throw PipelineError(ErrorCode::IoError,
                        "cannot create run dir " + run_dir.string() + ": " +
                            ec.message());
  }

  ordered_json manifest;
  manifest["case_ids"] = ordered_json::array();
  for (const auto& benchmark_case : cases) {
    manifest["case_ids"].push_back(benchmark_case.case_id);
  }
  write_text_file(run_dir / "cases_manifest.json", manifest.dump(2) + "\n");

  std::vector<std::optional<CaseResult>> results(cases.size());
  std::vector<std::optional<CaseError>> failures(cases.size());

  auto process_case = [&](std::size_t index) {
    const BenchmarkCase& benchmark_case = cases[index];
    const auto case_dir = cases_root / benchmark_case.case_id;
    if (auto resumed = load_case_result(case_dir)) {
      std::cerr << "case '" << benchmark_case.case_id
                << "': resumed from existing report\n";
      results[index] = std::move(*resumed);
      return;
    }
    try {
      results[index] = run_case(benchmark_case, case_dir);
    } catch (const std::exception& e) {
      failures[index] = CaseError{benchmark_case.case_id, e.what()};
      std::cerr << "case '" << benchmark_case.case_id << "' failed: "
                << e.what() << "\n";
    }
  };

  const int parallelism = std::max(1, config_.case_parallelism);
  if (parallelism == 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      process_case(i);
    }
  } else {
    for (std::size_t begin = 0; begin < cases.size();
         begin += static_cast<std::size_t>(parallelism)) {
      const std::size_t end = std::min(
          cases.size(), begin + static_cast<std::size_t>(parallelism));
      std::vector<std::future<void>> wave;
      for (std::size_t i = begin; i < end; ++i) {
        wave.push_back(std::async(std::launch::async, process_case, i));
      }
      for (auto& future : wave) {
        future.get();
      }
    }
  }

  BenchmarkReport report;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (results[i]) {
      report.per_case.push_back(std::move(*results[i]));
    } else if (failures[i]) {
      report.errors.push_back(std::move(*failures[i]));
    }
  }
  if (report.per_case.empty()) {
    throw PipelineError(ErrorCode::BenchmarkFailed,
                        "all " + std::to_string(cases.size()) +
                            " cases failed");
  }
  return report;
}

BenchmarkReport Evaluator::aggregate_from_dir(
    const std::filesystem::path& run_dir) {
  const auto manifest_path = run_dir / "cases_manifest.json";
  std::vector<std::string> case_ids;
  if (std::filesystem::exists(manifest_path)) {
    const json manifest = json::parse(read_text_file(manifest_path));
    for (const auto& id : manifest.at("case_ids")) {
      case_ids.push_back(id.get<std::string>());
    }
  } else if (std::filesystem::exists(run_dir / "cases")) {
    for (const auto& entry :
         std::filesystem::directory_iterator(run_dir / "cases")) {
      if (entry.is_directory()) {
        case_ids.push_back(entry.path().filename().string());
      }
    }
    std::sort(case_ids.begin(), case_ids.end());
  } else {
    throw PipelineError(ErrorCode::IoError,
                        "no benchmark run found under " + run_dir.string());
  }

  BenchmarkReport report;
  for (const auto& case_id : case_ids) {
    if (auto result = load_case_result(run_dir / "cases" / case_id)) {
      report.per_case.push_back(std::move(*result));
    } else {
      report.errors.push_back({case_id, "no completed report.json"});
    }
  }
  if (report.per_case.empty()) {
    throw PipelineError(ErrorCode::BenchmarkFailed,
                        "no completed cases under " + run_dir.string());
  }
  return report;
}

void Evaluator::emit_report(const BenchmarkReport& report,
                            const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw PipelineError(ErrorCode::IoError,
                        "cannot create report dir " + out_dir.string() + ": " +
                            ec.message());
  }

  ordered_json doc;
  doc["cases"] = ordered_json::array();
  for (const auto& result : report.per_case) {
    ordered_json entry;
    entry["case_id"] = result.case_id;
    entry["framework"] = similarity_report_to_json(result.framework);
    entry["baseline"] = similarity_report_to_json(result.baseline);
    doc["cases"].push_back(std::move(entry));
  }
  doc["means"] = ordered_json::object();
  for (Condition condition : {Condition::framework, Condition::baseline}) {
    ordered_json means;
    for (Metric metric : all_metrics()) {
      means[std::string(metric_name(metric))] = report.mean(metric, condition);
    }
    doc["means"][std::string(condition_name(condition))] = std::move(means);
  }
  doc["errors"] = ordered_json::array();
  for (const auto& error : report.errors) {
    ordered_json e;
    e["case_id"] = error.case_id;
    e["message"] = error.message;
    doc["errors"].push_back(std::move(e));
  }
  write_text_file(out_dir / "benchmark_report.json", doc.dump(2) + "\n");

  // Overall scatter: one point per case against the equality line.
  {
    std::ostringstream csv;
    csv << "case_id,framework_mean,baseline_mean\n";
    for (const auto& result : report.per_case) {
      csv << result.case_id << "," << format_score(result.framework.overall_mean())
          << "," << format_score(result.baseline.overall_mean()) << "\n";
    }
    write_text_file(out_dir / "scatter.csv", csv.str());
  }

  // Mean bars for the three headline metrics.
  {
    std::ostringstream csv;
    csv << "metric,condition,mean\n";
    for (Metric metric : {Metric::DR, Metric::UP, Metric::KM}) {
      for (Condition condition : {Condition::framework, Condition::baseline}) {
        csv << metric_name(metric) << "," << condition_name(condition) << ","
            << format_score(report.mean(metric, condition)) << "\n";
      }
    }
    write_text_file(out_dir / "bars.csv", csv.str());
  }

  // Per-metric case-by-case line series.
  for (Metric metric : all_metrics()) {
    std::ostringstream csv;
    csv << "case_id,framework,baseline\n";
    for (const auto& result : report.per_case) {
      csv << result.case_id << "," << format_score(result.framework.metric(metric))
          << "," << format_score(result.baseline.metric(metric)) << "\n";
    }
    const std::string name(metric_name(metric));
    write_text_file(out_dir / ("series_" + name.substr(0, 2) + ".csv"),
                    csv.str());
  }
}

}  // namespace ccpipe
