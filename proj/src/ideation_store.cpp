#include "ccpipe/ideation_store.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "ccpipe/errors.hpp"
#include "ccpipe/util.hpp"

namespace ccpipe {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view level_name(Level level) {
  switch (level) {
    case Level::L1: return "L1";
    case Level::L2: return "L2";
    case Level::L3: return "L3";
    case Level::L4: return "L4";
  }
  return "L?";
}

std::optional<Level> level_from_name(std::string_view name) {
  for (Level l : all_levels()) {
    if (level_name(l) == name) {
      return l;
    }
  }
  return std::nullopt;
}

const InnovationEntry* Corpus::find(std::string_view entry_id) const {
  for (const auto& entry : entries) {
    if (entry.entry_id == entry_id) {
      return &entry;
    }
  }
  return nullptr;
}

namespace {

constexpr std::array<std::string_view, 5> kRequiredStringFields = {
    "entry_id", "name", "original_problem", "key_mechanism", "novel_insight"};

std::string require_trimmed_string(const json& obj, std::string_view field) {
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

// SAX pass that rejects a repeated L1..L4 key inside any object that sits
// under a "levels" key. A DOM parse cannot see this: later duplicates
// silently win, so the scan runs on the raw text before parsing.
struct DuplicateLevelScanner : public nlohmann::json_sax<json> {
  struct Frame {
    bool is_levels = false;
    std::set<std::string> keys;
  };

  std::vector<Frame> stack;
  std::string pending_key;

  bool key(string_t& val) override {
    if (!stack.empty()) {
      Frame& frame = stack.back();
      if (!frame.keys.insert(val).second && frame.is_levels &&
          level_from_name(val)) {
        throw PipelineError(ErrorCode::DuplicateLevel,
                            "level key '" + val + "' repeated");
      }
    }
    pending_key = val;
    return true;
  }

  bool start_object(std::size_t) override {
    Frame frame;
    frame.is_levels = (pending_key == "levels");
    stack.push_back(std::move(frame));
    pending_key.clear();
    return true;
  }

  bool end_object() override {
    stack.pop_back();
    return true;
  }

  bool start_array(std::size_t) override {
    pending_key.clear();
    return true;
  }

  bool end_array() override { return true; }
  bool null() override { return true; }
  bool boolean(bool) override { return true; }
  bool number_integer(number_integer_t) override { return true; }
  bool number_unsigned(number_unsigned_t) override { return true; }
  bool number_float(number_float_t, const string_t&) override { return true; }
  bool string(string_t&) override { return true; }
  bool binary(binary_t&) override { return true; }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    throw PipelineError(ErrorCode::ParseError,
                        "parse error at byte " + std::to_string(position) +
                            ": " + ex.what());
  }
};

void scan_duplicate_level_keys(std::string_view text) {
  DuplicateLevelScanner scanner;
  json::sax_parse(text, &scanner);
}

json parse_json_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw PipelineError(ErrorCode::ParseError,
                        "parse error at byte " + std::to_string(e.byte) + ": " +
                            e.what());
  }
}

void reject_unknown_keys(const json& obj,
                         const std::vector<std::string_view>& allowed,
                         std::string_view context) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end()) {
      throw PipelineError(ErrorCode::ParseError,
                          "unexpected key '" + item.key() + "' in " +
                              std::string(context));
    }
  }
}

}  // namespace

InnovationEntry validate_entry(const json& raw, KeyPolicy policy) {
  if (!raw.is_object()) {
    throw PipelineError(ErrorCode::ParseError, "entry is not a JSON object");
  }
  if (policy == KeyPolicy::Strict) {
    reject_unknown_keys(raw,
                        {"entry_id", "name", "original_problem",
                         "key_mechanism", "novel_insight", "levels",
                         "source_ref"},
                        "entry");
  }

  InnovationEntry entry;
  entry.entry_id = require_trimmed_string(raw, "entry_id");
  entry.name = require_trimmed_string(raw, "name");
  entry.original_problem = require_trimmed_string(raw, "original_problem");
  entry.key_mechanism = require_trimmed_string(raw, "key_mechanism");
  entry.novel_insight = require_trimmed_string(raw, "novel_insight");

  auto levels_it = raw.find("levels");
  if (levels_it == raw.end() || levels_it->is_null()) {
    throw PipelineError(ErrorCode::MissingField,
                        "required field 'levels' is absent");
  }
  if (!levels_it->is_object()) {
    throw PipelineError(ErrorCode::ParseError, "'levels' must be an object");
  }
  if (policy == KeyPolicy::Strict) {
    reject_unknown_keys(*levels_it, {"L1", "L2", "L3", "L4"}, "levels");
  }
  for (Level l : all_levels()) {
    auto it = levels_it->find(level_name(l));
    if (it == levels_it->end() || it->is_null()) {
      throw PipelineError(ErrorCode::MissingLevel,
                          "level " + std::string(level_name(l)) + " is absent");
    }
    if (!it->is_string()) {
      throw PipelineError(ErrorCode::ParseError,
                          "level " + std::string(level_name(l)) +
                              " must be a string");
    }
    std::string text = trim_copy(it->get_ref<const std::string&>());
    if (text.empty()) {
      throw PipelineError(ErrorCode::EmptyField,
                          "field 'levels." + std::string(level_name(l)) +
                              "' is blank");
    }
    entry.level(l) = std::move(text);
  }

  if (auto it = raw.find("source_ref"); it != raw.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw PipelineError(ErrorCode::ParseError,
                          "field 'source_ref' must be a string");
    }
    std::string ref = trim_copy(it->get_ref<const std::string&>());
    if (!ref.empty()) {
      entry.source_ref = std::move(ref);
    }
  }
  return entry;
}

ordered_json entry_to_json(const InnovationEntry& entry) {
  ordered_json out;
  out["entry_id"] = entry.entry_id;
  out["name"] = entry.name;
  out["original_problem"] = entry.original_problem;
  out["key_mechanism"] = entry.key_mechanism;
  out["novel_insight"] = entry.novel_insight;
  ordered_json levels;
  for (Level l : all_levels()) {
    levels[std::string(level_name(l))] = entry.level(l);
  }
  out["levels"] = std::move(levels);
  if (entry.source_ref) {
    out["source_ref"] = *entry.source_ref;
  }
  return out;
}

Corpus parse_corpus(std::string_view json_text) {
  scan_duplicate_level_keys(json_text);
  json doc = parse_json_document(json_text);

  if (!doc.is_object()) {
    throw PipelineError(ErrorCode::ParseError,
                        "corpus document must be a JSON object");
  }
  reject_unknown_keys(doc, {"format_version", "corpus_id", "entries"},
                      "corpus");

  Corpus corpus;
  corpus.format_version = require_trimmed_string(doc, "format_version");
  if (corpus.format_version != "1.0") {
    throw PipelineError(ErrorCode::ParseError,
                        "unsupported format_version '" + corpus.format_version +
                            "' (expected \"1.0\")");
  }
  corpus.corpus_id = require_trimmed_string(doc, "corpus_id");

  auto entries_it = doc.find("entries");
  if (entries_it == doc.end() || entries_it->is_null()) {
    throw PipelineError(ErrorCode::MissingField,
                        "required field 'entries' is absent");
  }
  if (!entries_it->is_array()) {
    throw PipelineError(ErrorCode::ParseError, "'entries' must be an array");
  }

  std::vector<IndexedError> errors;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t i = 0; i < entries_it->size(); ++i) {
    try {
      InnovationEntry entry = validate_entry((*entries_it)[i]);
      if (!seen_ids.insert(entry.entry_id).second) {
        throw PipelineError(ErrorCode::DuplicateEntryId,
                            "entry_id '" + entry.entry_id + "' repeated");
      }
      corpus.entries.push_back(std::move(entry));
    } catch (const PipelineError& e) {
      errors.push_back({i, e.code(), e.what()});
    }
  }
  if (!errors.empty()) {
    throw AggregateError(std::move(errors), "corpus entries");
  }
  return corpus;
}

std::string corpus_to_json_text(const Corpus& corpus) {
  ordered_json out;
  out["format_version"] = corpus.format_version;
  out["corpus_id"] = corpus.corpus_id;
  out["entries"] = ordered_json::array();
  for (const auto& entry : corpus.entries) {
    out["entries"].push_back(entry_to_json(entry));
  }
  return out.dump(2) + "\n";
}

Corpus load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_text_file(path));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_text_file(path, corpus_to_json_text(corpus));
}

std::string level_text(const InnovationEntry& entry, Level level) {
  return entry.name + ": " + entry.level(level);
}

}  // namespace ccpipe
