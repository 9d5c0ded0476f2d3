#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccpipe/config.hpp"
#include "ccpipe/errors.hpp"
#include "ccpipe/util.hpp"

namespace {

using namespace ccpipe;
using nlohmann::json;
using nlohmann::ordered_json;

struct GlobalFlags {
  std::string config_file;
  std::string mode;
  std::string out;
  std::string fixtures;
  std::string transcript;
  std::string cache_dir;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

PipelineConfig resolve_config(const GlobalFlags& flags) {
  std::optional<std::filesystem::path> config_path;
  if (!flags.config_file.empty()) {
    config_path = flags.config_file;
  }
  PipelineConfig config = load_pipeline_config(config_path);

  if (!flags.mode.empty()) {
    auto mode = run_mode_from_name(flags.mode);
    if (!mode) {
      throw PipelineError(ErrorCode::ConfigError,
                          "unknown mode '" + flags.mode + "'");
    }
    config.mode = *mode;
  }
  if (flags.seed) {
    config.seed = *flags.seed;
  }
  if (!flags.fixtures.empty()) {
    config.fixtures_path = flags.fixtures;
  }
  if (!flags.transcript.empty()) {
    config.transcript_path = flags.transcript;
  }
  if (!flags.cache_dir.empty()) {
    config.cache_dir = flags.cache_dir;
  }
  config.strict = flags.strict;
  return config;
}

std::filesystem::path pick_run_dir(const GlobalFlags& flags,
                                   const PipelineConfig& config,
                                   const std::string& command,
                                   const std::string& input_tag) {
  if (!flags.out.empty()) {
    return flags.out;
  }
  const auto now = std::chrono::system_clock::now();
  const std::time_t time = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d%H%M%S", std::gmtime(&time));
  const std::string digest =
      sha256_hex({command, input_tag, std::to_string(config.seed)}).substr(0, 8);

  std::filesystem::path base =
      config.out_root / ("run-" + std::string(stamp) + "-" + digest);
  std::filesystem::path candidate = base;
  for (int i = 2; std::filesystem::exists(candidate); ++i) {
    candidate = base;
    candidate += "-" + std::to_string(i);  // never overwrite a prior run
  }
  return candidate;
}

ProblemStatement load_problem_file(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  if (path.extension() == ".json") {
    json doc;
    try {
      doc = json::parse(content);
    } catch (const json::parse_error& e) {
      throw PipelineError(ErrorCode::ParseError,
                          "problem file " + path.string() + ": " + e.what());
    }
    ProblemStatement problem;
    problem.statement_id = doc.value("statement_id", path.stem().string());
    if (!doc.contains("text") || !doc["text"].is_string()) {
      throw PipelineError(ErrorCode::MissingField,
                          "problem file needs a string 'text' field");
    }
    problem.text = trim_copy(doc["text"].get<std::string>());
    if (problem.text.empty()) {
      throw PipelineError(ErrorCode::EmptyField, "problem text is blank");
    }
    if (doc.contains("source_ref") && doc["source_ref"].is_string()) {
      problem.source_ref = doc["source_ref"].get<std::string>();
    }
    return problem;
  }
  // Plain text file: the whole content is the statement.
  ProblemStatement problem;
  problem.statement_id = path.stem().string();
  problem.text = trim_copy(content);
  if (problem.text.empty()) {
    throw PipelineError(ErrorCode::EmptyField, "problem text is blank");
  }
  return problem;
}

std::string run_id_for(const PipelineConfig& config, const std::string& tag) {
  return sha256_hex({tag, std::to_string(config.seed)}).substr(0, 16);
}

int cmd_ingest(const GlobalFlags& flags, const std::vector<std::string>& inputs,
               const std::string& corpus_id) {
  PipelineConfig config = resolve_config(flags);
  Pipeline pipeline = build_pipeline(config);

  Corpus corpus;
  corpus.corpus_id =
      corpus_id.empty() ? "corpus-" + run_id_for(config, inputs.front()).substr(0, 8)
                        : corpus_id;

  std::vector<std::string> failures;
  std::set<std::string> used_ids;
  for (const auto& input : inputs) {
    const std::filesystem::path path = input;
    try {
      const std::string text = read_text_file(path);
      std::string entry_id = path.stem().string();
      for (int n = 2; used_ids.count(entry_id); ++n) {
        entry_id = path.stem().string() + "-" + std::to_string(n);
      }
      InnovationEntry entry =
          pipeline.retriever->extract_ideation(text, entry_id);
      entry.source_ref = path.filename().string();
      used_ids.insert(entry.entry_id);
      corpus.entries.push_back(std::move(entry));
      std::cout << "ingested " << input << " as entry '"
                << corpus.entries.back().entry_id << "'\n";
    } catch (const std::exception& e) {
      failures.push_back(input);
      std::cerr << "failed " << input << ": " << e.what() << "\n";
    }
  }

  if (corpus.entries.empty()) {
    std::cerr << "no inputs could be ingested\n";
    return 1;
  }
  const std::filesystem::path out_path =
      flags.out.empty() ? std::filesystem::path("corpus.json")
                        : std::filesystem::path(flags.out);
  save_corpus(corpus, out_path);
  std::cout << "wrote " << corpus.entries.size() << " entries to "
            << out_path.string() << "\n";
  if (!failures.empty() && flags.strict) {
    return 1;
  }
  return 0;
}

int cmd_extract(const GlobalFlags& flags, const std::string& input,
                const std::string& kind, const std::string& entry_id) {
  PipelineConfig config = resolve_config(flags);
  Pipeline pipeline = build_pipeline(config);

  const std::filesystem::path path = input;
  const std::string text = read_text_file(path);

  ordered_json out;
  if (kind == "problem") {
    const ProblemStatement problem =
        pipeline.retriever->extract_problem(text, path.stem().string());
    out["statement_id"] = problem.statement_id;
    out["text"] = problem.text;
  } else if (kind == "ideation") {
    const InnovationEntry entry = pipeline.retriever->extract_ideation(
        text, entry_id.empty() ? path.stem().string() : entry_id);
    out = entry_to_json(entry);
  } else if (kind == "target") {
    const TargetFields fields =
        pipeline.evaluator->extract_target_fields(text);
    out["problem_structure"] = fields.problem_structure;
    out["design_rationale"] = fields.design_rationale;
    out["universal_principle"] = fields.universal_principle;
    out["key_mechanism"] = fields.key_mechanism;
  } else {
    std::cerr << "unknown --kind '" << kind
              << "' (expected problem, ideation, or target)\n";
    return 2;
  }

  if (flags.out.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    write_text_file(flags.out, out.dump(2) + "\n");
    std::cout << "wrote " << flags.out << "\n";
  }
  return 0;
}

int cmd_generate(const GlobalFlags& flags, const std::string& problem_file,
                 const std::string& corpus_file) {
  PipelineConfig config = resolve_config(flags);
  Pipeline pipeline = build_pipeline(config);

  const ProblemStatement problem = load_problem_file(problem_file);
  const Corpus corpus = load_corpus(corpus_file);
  const auto run_dir = pick_run_dir(flags, config, "generate",
                                    problem.statement_id + corpus.corpus_id);
  RunWriter writer(run_dir);
  const std::string run_id = run_id_for(config, problem.statement_id);

  try {
    pipeline.generator->generate_idea(problem, corpus, &writer);
  } catch (const std::exception& e) {
    writer.write_transcript(pipeline.recorder->snapshot(run_id));
    std::cerr << "generate failed: " << e.what() << "\n"
              << "partial audit bundle preserved in " << run_dir.string()
              << "\n";
    return 1;
  }
  writer.write_transcript(pipeline.recorder->snapshot(run_id));
  std::cout << "idea written to " << (run_dir / "idea.json").string() << "\n"
            << "audit bundle in " << run_dir.string() << "\n";
  return 0;
}

int cmd_baseline(const GlobalFlags& flags, const std::string& problem_file) {
  PipelineConfig config = resolve_config(flags);
  Pipeline pipeline = build_pipeline(config);

  const ProblemStatement problem = load_problem_file(problem_file);
  const auto run_dir =
      pick_run_dir(flags, config, "baseline", problem.statement_id);
  RunWriter writer(run_dir);

  const GeneratedIdea idea = pipeline.generator->generate_baseline(problem);
  writer.write_json("idea.json", idea_to_json(idea));
  std::cout << "idea written to " << (run_dir / "idea.json").string() << "\n";
  return 0;
}

int cmd_evaluate(const GlobalFlags& flags, const std::string& benchmark_file) {
  PipelineConfig config = resolve_config(flags);
  Pipeline pipeline = build_pipeline(config);

  const auto cases = load_benchmark(benchmark_file);
  const auto run_dir = pick_run_dir(flags, config, "evaluate", benchmark_file);

  const BenchmarkReport report =
      pipeline.evaluator->run_benchmark(cases, run_dir);
  Evaluator::emit_report(report, run_dir);

  std::cout << "completed " << report.per_case.size() << "/" << cases.size()
            << " cases; report in " << run_dir.string() << "\n";
  for (Metric metric : {Metric::DR, Metric::UP, Metric::KM}) {
    std::cout << "  " << metric_name(metric) << " framework "
              << format_score(report.mean(metric, Condition::framework))
              << " vs baseline "
              << format_score(report.mean(metric, Condition::baseline)) << "\n";
  }
  for (const auto& error : report.errors) {
    std::cerr << "case '" << error.case_id << "' failed: " << error.message
              << "\n";
  }
  if (flags.strict && !report.errors.empty()) {
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& run_dir) {
  const BenchmarkReport report = Evaluator::aggregate_from_dir(run_dir);
  Evaluator::emit_report(report, run_dir);
  std::cout << "re-emitted report for " << report.per_case.size()
            << " cases in " << run_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial idea-generation pipeline: level-wise analogy "
               "retrieval over a structured innovation store, two-stage "
               "recombination, and embedding-based benchmark evaluation"};
  app.require_subcommand(1);

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  app.add_option("--config", flags.config_file, "JSON config file");
  app.add_option("--mode", flags.mode, "Provider mode: mock, replay, or live");
  app.add_option("--out", flags.out, "Output path (run directory, or file "
                                     "for ingest/extract)");
  app.add_flag("--strict", flags.strict, "Any partial failure exits nonzero");
  auto* seed_opt =
      app.add_option("--seed", seed_value, "Seed for deterministic mock runs");
  app.add_option("--fixtures", flags.fixtures,
                 "Scripted mock responses (JSON keyed by agent name)");
  app.add_option("--transcript", flags.transcript,
                 "Transcript to replay (JSON lines)");
  app.add_option("--cache-dir", flags.cache_dir, "Embedding cache directory");

  auto* ingest = app.add_subcommand(
      "ingest", "Build a corpus from reference text files");
  std::vector<std::string> ingest_inputs;
  std::string ingest_corpus_id;
  ingest->add_option("inputs", ingest_inputs, "Reference text files")
      ->required()
      ->expected(-1);
  ingest->add_option("--corpus-id", ingest_corpus_id, "Corpus identifier");

  auto* extract = app.add_subcommand(
      "extract", "Extract a problem statement, ideation record, or target "
                 "fields from a text file");
  std::string extract_input;
  std::string extract_kind = "problem";
  std::string extract_entry_id;
  extract->add_option("input", extract_input, "Input text file")->required();
  extract->add_option("--kind", extract_kind,
                      "What to extract: problem, ideation, or target");
  extract->add_option("--entry-id", extract_entry_id,
                      "Entry id for --kind ideation");

  auto* generate = app.add_subcommand(
      "generate", "Generate an idea for a problem using a corpus");
  std::string generate_problem;
  std::string generate_corpus;
  generate->add_option("--problem", generate_problem,
                       "Problem file (JSON or plain text)")
      ->required();
  generate->add_option("--corpus", generate_corpus, "Corpus file")->required();

  auto* baseline = app.add_subcommand(
      "baseline", "Generate an idea directly from the problem statement");
  std::string baseline_problem;
  baseline->add_option("--problem", baseline_problem,
                       "Problem file (JSON or plain text)")
      ->required();

  auto* evaluate = app.add_subcommand(
      "evaluate", "Run the framework-vs-baseline benchmark");
  std::string evaluate_benchmark;
  evaluate->add_option("--benchmark", evaluate_benchmark, "Benchmark file")
      ->required();

  auto* report = app.add_subcommand(
      "report", "Re-emit report artifacts from a completed run directory");
  std::string report_run;
  report->add_option("--run", report_run, "Benchmark run directory")
      ->required();

  CLI11_PARSE(app, argc, argv);
  if (!seed_opt->empty()) {
    flags.seed = seed_value;
  }

  try {
    if (ingest->parsed()) {
      return cmd_ingest(flags, ingest_inputs, ingest_corpus_id);
    }
    if (extract->parsed()) {
      return cmd_extract(flags, extract_input, extract_kind, extract_entry_id);
    }
    if (generate->parsed()) {
      return cmd_generate(flags, generate_problem, generate_corpus);
    }
    if (baseline->parsed()) {
      return cmd_baseline(flags, baseline_problem);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(flags, evaluate_benchmark);
    }
    if (report->parsed()) {
      return cmd_report(report_run);
    }
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
