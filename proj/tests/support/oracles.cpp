#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccpipe::testing {

std::vector<EmbeddingVector> StubEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  for (const auto& text : texts) {
    auto it = table_.find(text);
    if (it == table_.end()) {
      throw std::runtime_error("stub embedder has no vector for: " + text);
    }
    out.push_back(it->second);
  }
  return out;
}

namespace {

// Deliberately separate from ccpipe::cosine; same accumulation order so
// scores agree bit-for-bit on identical inputs.
double reference_cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double value = dot / (std::sqrt(na) * std::sqrt(nb));
  if (value > 1.0) value = 1.0;
  if (value < -1.0) value = -1.0;
  return value;
}

}  // namespace

std::vector<RetrievalMatch> brute_force_matches(const ProblemAnalysis& analysis,
                                                const Corpus& corpus,
                                                Embedder& embedder,
                                                const RetrievalConfig& config) {
  std::vector<RetrievalMatch> out;
  for (Level level : all_levels()) {
    // Embed all entry canonical texts and all structure texts at this level.
    std::vector<std::string> entry_texts;
    for (const auto& entry : corpus.entries) {
      entry_texts.push_back(level_text(entry, level));
    }
    const auto entry_vecs = embedder.embed_batch(entry_texts);

    for (const auto& structure : analysis.structures) {
      const auto structure_vec = embedder.embed_one(structure.level(level));

      // Rank every entry, then walk the ranking taking the best top_k.
      struct Scored {
        double score;
        std::string entry_id;
      };
      std::vector<Scored> scored;
      for (std::size_t e = 0; e < corpus.entries.size(); ++e) {
        scored.push_back({reference_cosine(structure_vec, entry_vecs[e]),
                          corpus.entries[e].entry_id});
      }
      std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.entry_id < y.entry_id;
      });
      const std::size_t keep =
          std::min<std::size_t>(scored.size(),
                                static_cast<std::size_t>(std::max(1, config.top_k)));
      for (std::size_t rank = 0; rank < keep; ++rank) {
        if (config.min_score && scored[rank].score < *config.min_score) {
          continue;
        }
        out.push_back({structure.structure_id, level, scored[rank].entry_id,
                       scored[rank].score});
      }
    }
  }
  return out;
}

namespace {

std::string random_text(std::mt19937_64& rng, const std::string& tag) {
  return tag + " text " + std::to_string(rng() % 1000000);
}

}  // namespace

Corpus random_corpus(std::mt19937_64& rng, std::size_t max_entries) {
  Corpus corpus;
  corpus.corpus_id = "random-" + std::to_string(rng() % 100000);
  const std::size_t count = 1 + rng() % max_entries;
  for (std::size_t i = 0; i < count; ++i) {
    InnovationEntry entry;
    char id[8];
    std::snprintf(id, sizeof(id), "e%03zu", i);
    entry.entry_id = id;
    entry.name = "name " + std::to_string(rng() % 1000000);
    entry.original_problem = random_text(rng, "problem");
    entry.key_mechanism = random_text(rng, "mechanism");
    entry.novel_insight = random_text(rng, "insight");
    for (Level l : all_levels()) {
      entry.level(l) = random_text(rng, "level");
    }
    // Clone an earlier entry's name and level texts sometimes so several
    // entries share canonical texts and force exact score ties.
    if (i > 0 && rng() % 5 == 0) {
      const auto& donor = corpus.entries[rng() % corpus.entries.size()];
      entry.name = donor.name;
      entry.levels = donor.levels;
    }
    corpus.entries.push_back(std::move(entry));
  }
  return corpus;
}

ProblemAnalysis random_analysis(std::mt19937_64& rng, const Corpus& corpus,
                                int min_structures, int max_structures) {
  ProblemAnalysis analysis;
  analysis.problem.statement_id = "p-random";
  analysis.problem.text = random_text(rng, "problem statement");
  const int count =
      min_structures +
      static_cast<int>(rng() % static_cast<std::uint64_t>(
                                   max_structures - min_structures + 1));
  for (int s = 0; s < count; ++s) {
    ProblemStructure structure;
    structure.structure_id = "s" + std::to_string(s + 1);
    structure.perspective = "perspective " + std::to_string(s + 1);
    for (Level l : all_levels()) {
      // Sometimes reuse an entry's canonical text so a perfect match exists.
      if (!corpus.entries.empty() && rng() % 4 == 0) {
        const auto& donor = corpus.entries[rng() % corpus.entries.size()];
        structure.level(l) = level_text(donor, l);
      } else {
        structure.level(l) = random_text(rng, "structure");
      }
    }
    analysis.structures.push_back(std::move(structure));
  }
  return analysis;
}

}  // namespace ccpipe::testing
