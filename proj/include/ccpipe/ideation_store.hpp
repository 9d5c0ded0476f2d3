#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ccpipe {

// Abstraction gradient an innovation is described at: L1 is the most
// domain-specific framing, L4 the most universal. Exactly four levels exist.
enum class Level : int { L1 = 0, L2 = 1, L3 = 2, L4 = 3 };

inline constexpr int kLevelCount = 4;

constexpr std::array<Level, kLevelCount> all_levels() {
  return {Level::L1, Level::L2, Level::L3, Level::L4};
}

std::string_view level_name(Level level);
std::optional<Level> level_from_name(std::string_view name);

using LevelTexts = std::array<std::string, kLevelCount>;

// One stored innovation in the semi-structured ideation format: identity and
// context fields plus a text per abstraction level.
struct InnovationEntry {
  std::string entry_id;
  std::string name;
  std::string original_problem;
  std::string key_mechanism;
  std::string novel_insight;
  LevelTexts levels;
  std::optional<std::string> source_ref;

  const std::string& level(Level l) const {
    return levels[static_cast<int>(l)];
  }
  std::string& level(Level l) { return levels[static_cast<int>(l)]; }

  bool operator==(const InnovationEntry&) const = default;
};

struct Corpus {
  std::string corpus_id;
  std::string format_version = "1.0";
  std::vector<InnovationEntry> entries;

  const InnovationEntry* find(std::string_view entry_id) const;

  bool operator==(const Corpus&) const = default;
};

// Whether keys outside the documented schema are rejected. Files are strict;
// model output is lenient (extra keys ignored).
enum class KeyPolicy { Strict, Lenient };

// Validates a parsed entry document: required fields present and non-blank
// after trimming, all four level texts present and non-blank. All string
// fields are returned trimmed. Throws PipelineError with MissingField,
// EmptyField, MissingLevel, or ParseError.
InnovationEntry validate_entry(const nlohmann::json& raw,
                               KeyPolicy policy = KeyPolicy::Strict);

nlohmann::ordered_json entry_to_json(const InnovationEntry& entry);

// Parses corpus text: duplicate-level-key scan, JSON parse, then per-entry
// validation. Per-entry failures are aggregated into an AggregateError that
// names each failing entry index. Also rejects duplicate entry_id values.
Corpus parse_corpus(std::string_view json_text);

// Canonical serialization: fixed key order, 2-space indent, trailing newline.
// Equal corpora always produce byte-equal text.
std::string corpus_to_json_text(const Corpus& corpus);

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Canonical text embedded for an entry at a level: the entry name, a
// separator, then the level text. The name prefix keeps entries with similar
// universal phrasing distinguishable at high abstraction levels.
std::string level_text(const InnovationEntry& entry, Level level);

}  // namespace ccpipe
