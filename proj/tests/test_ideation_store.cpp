#include "ccpipe/ideation_store.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

#include "ccpipe/errors.hpp"
#include "ccpipe/util.hpp"

using namespace ccpipe;
using nlohmann::json;

namespace {

const std::filesystem::path kFixtures = CCPIPE_FIXTURES_DIR;

json full_entry_json() {
  return json::parse(R"({
    "entry_id": "adamw",
    "name": "AdamW",
    "original_problem": "Weight decay entangled with adaptive updates.",
    "key_mechanism": "Shrink weights in a separate step.",
    "novel_insight": "Regularization and adaptation are independent.",
    "levels": {
      "L1": "Post-update multiplicative shrinkage in Adam.",
      "L2": "decouple regularization from update",
      "L3": "Separate interacting corrective forces.",
      "L4": "Separation restores independent control."
    },
    "source_ref": "note"
  })");
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() /
             ("ccpipe_store_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PipelineError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a PipelineError";
  return ErrorCode::ConfigError;
}

}  // namespace

TEST(LevelTest, ExactlyFourOrderedLevels) {
  const auto levels = all_levels();
  ASSERT_EQ(levels.size(), 4u);
  EXPECT_LT(static_cast<int>(Level::L1), static_cast<int>(Level::L2));
  EXPECT_LT(static_cast<int>(Level::L2), static_cast<int>(Level::L3));
  EXPECT_LT(static_cast<int>(Level::L3), static_cast<int>(Level::L4));
  EXPECT_EQ(level_name(Level::L3), "L3");
  EXPECT_EQ(level_from_name("L4"), Level::L4);
  EXPECT_FALSE(level_from_name("L5").has_value());
}

TEST(ValidateEntry, WellFormedInputPasses) {
  const InnovationEntry entry = validate_entry(full_entry_json());
  EXPECT_EQ(entry.entry_id, "adamw");
  EXPECT_EQ(entry.name, "AdamW");
  EXPECT_EQ(entry.level(Level::L2), "decouple regularization from update");
  ASSERT_TRUE(entry.source_ref.has_value());
  EXPECT_EQ(*entry.source_ref, "note");
}

TEST(ValidateEntry, MissingLevelL3) {
  json raw = full_entry_json();
  raw["levels"].erase("L3");
  try {
    validate_entry(raw);
    FAIL() << "expected MissingLevel";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingLevel);
    EXPECT_NE(std::string(e.what()).find("L3"), std::string::npos);
  }
}

TEST(ValidateEntry, BlankNameIsEmptyField) {
  json raw = full_entry_json();
  raw["name"] = "   ";
  try {
    validate_entry(raw);
    FAIL() << "expected EmptyField";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyField);
    EXPECT_NE(std::string(e.what()).find("name"), std::string::npos);
  }
}

TEST(ValidateEntry, MissingRequiredField) {
  json raw = full_entry_json();
  raw.erase("key_mechanism");
  EXPECT_EQ(code_of([&] { validate_entry(raw); }), ErrorCode::MissingField);
}

TEST(ValidateEntry, BlankLevelTextIsEmptyField) {
  json raw = full_entry_json();
  raw["levels"]["L4"] = " \t ";
  EXPECT_EQ(code_of([&] { validate_entry(raw); }), ErrorCode::EmptyField);
}

TEST(ValidateEntry, UnknownKeyRejectedWhenStrict) {
  json raw = full_entry_json();
  raw["citation_count"] = 3;
  EXPECT_EQ(code_of([&] { validate_entry(raw); }), ErrorCode::ParseError);
  EXPECT_NO_THROW(validate_entry(raw, KeyPolicy::Lenient));
}

TEST(ValidateEntry, FieldsAreTrimmed) {
  json raw = full_entry_json();
  raw["name"] = "  AdamW  ";
  raw["levels"]["L1"] = "  padded  ";
  const InnovationEntry entry = validate_entry(raw);
  EXPECT_EQ(entry.name, "AdamW");
  EXPECT_EQ(entry.level(Level::L1), "padded");
}

TEST(ParseCorpus, DuplicateLevelKeyDetected) {
  const std::string text = read_text_file(
      kFixtures / "malformed" / "m10_entry_duplicate_L2.json");
  try {
    parse_corpus(text);
    FAIL() << "expected DuplicateLevel";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateLevel);
    EXPECT_NE(std::string(e.what()).find("L2"), std::string::npos);
  }
}

TEST(LoadCorpus, FixtureOfThreeValidEntriesInFileOrder) {
  const Corpus corpus = load_corpus(kFixtures / "corpus_valid_3.json");
  ASSERT_EQ(corpus.entries.size(), 3u);
  EXPECT_EQ(corpus.corpus_id, "fixture-3");
  EXPECT_EQ(corpus.entries[0].entry_id, "alpha-caching");
  EXPECT_EQ(corpus.entries[1].entry_id, "beta-backpressure");
  EXPECT_EQ(corpus.entries[2].entry_id, "gamma-quorum");
  EXPECT_EQ(corpus.find("beta-backpressure"), &corpus.entries[1]);
  EXPECT_EQ(corpus.find("nope"), nullptr);
}

TEST(LoadCorpus, AggregatedErrorNamesEntryIndexTwo) {
  try {
    load_corpus(kFixtures / "corpus_invalid_entry2.json");
    FAIL() << "expected AggregateError";
  } catch (const AggregateError& e) {
    ASSERT_EQ(e.errors().size(), 1u);
    EXPECT_EQ(e.errors()[0].index, 2u);
    EXPECT_EQ(e.errors()[0].code, ErrorCode::MissingLevel);
    EXPECT_NE(std::string(e.what()).find("[2]"), std::string::npos);
  }
}

TEST(LoadCorpus, EmptyEntryListIsValid) {
  const Corpus corpus = load_corpus(kFixtures / "corpus_empty.json");
  EXPECT_TRUE(corpus.entries.empty());
  EXPECT_EQ(corpus.corpus_id, "fixture-empty");
}

TEST(LoadCorpus, DuplicateEntryIdsRejected) {
  const std::string text = read_text_file(
      kFixtures / "malformed" / "m11_duplicate_entry_ids.json");
  EXPECT_EQ(code_of([&] { parse_corpus(text); }),
            ErrorCode::DuplicateEntryId);
}

TEST(SaveCorpus, SaveLoadRoundTripByteIdentical) {
  const auto dir = temp_dir();
  const Corpus corpus = load_corpus(kFixtures / "corpus_valid_3.json");

  save_corpus(corpus, dir / "first.json");
  const Corpus reloaded = load_corpus(dir / "first.json");
  EXPECT_EQ(corpus, reloaded);

  save_corpus(reloaded, dir / "second.json");
  EXPECT_EQ(read_text_file(dir / "first.json"),
            read_text_file(dir / "second.json"));
  std::filesystem::remove_all(dir);
}

TEST(SaveCorpus, UnwritableDestinationIsIoError) {
  const auto dir = temp_dir();
  write_text_file(dir / "occupied", "a regular file");
  const Corpus corpus = load_corpus(kFixtures / "corpus_empty.json");
  // Parent path component is a file, not a directory.
  EXPECT_EQ(code_of([&] {
              save_corpus(corpus, dir / "occupied" / "corpus.json");
            }),
            ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}

TEST(SaveCorpus, EmptyCorpusRoundTrips) {
  const auto dir = temp_dir();
  Corpus corpus;
  corpus.corpus_id = "empty";
  save_corpus(corpus, dir / "empty.json");
  const Corpus reloaded = load_corpus(dir / "empty.json");
  EXPECT_TRUE(reloaded.entries.empty());
  EXPECT_EQ(reloaded.corpus_id, "empty");
  std::filesystem::remove_all(dir);
}

TEST(LevelText, NamePrefixJoinedWithSeparator) {
  // entry{name:"AdamW", L2:"decouple regularization from update"}
  const InnovationEntry entry = validate_entry(full_entry_json());
  EXPECT_EQ(level_text(entry, Level::L2),
            "AdamW: decouple regularization from update");
}

TEST(LevelText, DeterministicAcrossCalls) {
  const InnovationEntry entry = validate_entry(full_entry_json());
  EXPECT_EQ(level_text(entry, Level::L4), level_text(entry, Level::L4));
}

TEST(LevelText, NameDistinguishesIdenticalLevelTexts) {
  InnovationEntry a = validate_entry(full_entry_json());
  InnovationEntry b = a;
  b.entry_id = "other";
  b.name = "Other name";
  ASSERT_EQ(a.level(Level::L4), b.level(Level::L4));
  EXPECT_NE(level_text(a, Level::L4), level_text(b, Level::L4));
}

// Round-trip property over randomized corpora: load(save(c)) == c and the
// serialization is canonical (second save byte-equal).
TEST(CorpusProperty, RandomRoundTrips) {
  std::mt19937_64 rng(7);
  const auto dir = temp_dir();
  for (int trial = 0; trial < 20; ++trial) {
    Corpus corpus;
    corpus.corpus_id = "prop-" + std::to_string(trial);
    const std::size_t count = rng() % 8;
    for (std::size_t i = 0; i < count; ++i) {
      InnovationEntry entry;
      entry.entry_id = "e" + std::to_string(i);
      entry.name = "name " + std::to_string(rng() % 1000);
      entry.original_problem = "problem " + std::to_string(rng() % 1000);
      entry.key_mechanism = "mechanism " + std::to_string(rng() % 1000);
      entry.novel_insight = "insight " + std::to_string(rng() % 1000);
      for (Level l : all_levels()) {
        entry.level(l) = "text " + std::to_string(rng() % 1000);
      }
      if (rng() % 2 == 0) {
        entry.source_ref = "ref " + std::to_string(rng() % 1000);
      }
      corpus.entries.push_back(std::move(entry));
    }
    const auto path = dir / ("prop" + std::to_string(trial) + ".json");
    save_corpus(corpus, path);
    EXPECT_EQ(load_corpus(path), corpus);
    const std::string first = read_text_file(path);
    save_corpus(corpus, path);
    EXPECT_EQ(read_text_file(path), first);
  }
  std::filesystem::remove_all(dir);
}
