#include "ccpipe/embedding.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ccpipe/errors.hpp"

using namespace ccpipe;

namespace {

std::filesystem::path temp_cache_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("ccpipe_cache_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

EmbeddingVector random_vector(std::mt19937_64& rng, std::size_t dim) {
  EmbeddingVector v(dim);
  bool nonzero = false;
  for (auto& x : v) {
    x = static_cast<double>(rng() % 2001) / 1000.0 - 1.0;
    nonzero = nonzero || x != 0.0;
  }
  if (!nonzero) {
    v[0] = 1.0;
  }
  return v;
}

}  // namespace

TEST(Cosine, SelfSimilarityIsOne) {
  const EmbeddingVector v{0.3, 0.4};
  EXPECT_DOUBLE_EQ(cosine(v, v), 1.0);
}

TEST(Cosine, OrthogonalVectorsScoreZero) {
  EXPECT_DOUBLE_EQ(cosine({1.0, 0.0}, {0.0, 1.0}), 0.0);
}

TEST(Cosine, HandComputedDiagonal) {
  // dot/(|a||b|) = 1/sqrt(2)
  EXPECT_NEAR(cosine({1.0, 0.0}, {1.0, 1.0}), 0.70710678118654752, 1e-8);
}

TEST(Cosine, DimMismatchRejected) {
  try {
    cosine({1.0, 0.0}, {1.0, 0.0, 0.0});
    FAIL() << "expected DimMismatch";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
  }
}

TEST(Cosine, ZeroVectorRejected) {
  try {
    cosine({0.0, 0.0}, {1.0, 0.0});
    FAIL() << "expected ZeroVector";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
}

// Symmetry, positive-scale invariance, and bounds over 1000 random pairs.
TEST(Cosine, PropertiesOverRandomPairs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 2 + rng() % 15;
    const EmbeddingVector a = random_vector(rng, dim);
    const EmbeddingVector b = random_vector(rng, dim);

    const double ab = cosine(a, b);
    EXPECT_NEAR(cosine(a, a), 1.0, 1e-9);
    EXPECT_NEAR(ab, cosine(b, a), 1e-12);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);

    const double alpha = 0.001 + static_cast<double>(rng() % 10000) / 10.0;
    EmbeddingVector scaled = a;
    for (auto& x : scaled) {
      x *= alpha;
    }
    EXPECT_NEAR(cosine(scaled, b), ab, 1e-9);
  }
}

TEST(CacheKey, DeterministicAndSensitive) {
  EXPECT_EQ(cache_key("p", "m", "text"), cache_key("p", "m", "text"));
  EXPECT_NE(cache_key("p", "m", "text"), cache_key("p", "m", "texT"));
  EXPECT_NE(cache_key("p", "m", "text"), cache_key("p", "m2", "text"));
  // Length framing: shifting a byte across the component boundary changes
  // the key.
  EXPECT_NE(cache_key("pa", "m", "text"), cache_key("p", "am", "text"));
}

TEST(MockEmbedder, DeterministicAcrossInstances) {
  MockEmbeddingProvider first(42);
  MockEmbeddingProvider second(42);
  const auto a = first.embed({"a", "b"});
  const auto b = second.embed({"a", "b"});
  ASSERT_EQ(a.size(), 2u);
  ASSERT_EQ(a[0].size(), 16u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a[0], a[1]);
}

TEST(MockEmbedder, SeedChangesVectors) {
  MockEmbeddingProvider first(1);
  MockEmbeddingProvider second(2);
  EXPECT_NE(first.embed({"same text"}), second.embed({"same text"}));
}

TEST(MockEmbedder, VectorsAreUnitNorm) {
  MockEmbeddingProvider provider(0);
  for (const auto& v : provider.embed({"x", "y", "z"})) {
    double norm = 0.0;
    for (double c : v) {
      norm += c * c;
    }
    EXPECT_NEAR(norm, 1.0, 1e-12);
  }
}

TEST(Embedder, SecondEmbedIsACacheHit) {
  const auto dir = temp_cache_dir("hit");
  auto provider = std::make_shared<MockEmbeddingProvider>(0);
  Embedder embedder(provider, std::make_shared<EmbeddingCache>(dir));

  const auto first = embedder.embed_batch({"cached text"});
  EXPECT_EQ(provider->call_count(), 1u);
  const auto second = embedder.embed_batch({"cached text"});
  EXPECT_EQ(provider->call_count(), 1u);  // served from cache
  EXPECT_EQ(first, second);
  std::filesystem::remove_all(dir);
}

TEST(Embedder, CachePersistsAcrossInstances) {
  const auto dir = temp_cache_dir("persist");
  auto provider_a = std::make_shared<MockEmbeddingProvider>(0);
  {
    Embedder embedder(provider_a, std::make_shared<EmbeddingCache>(dir));
    embedder.embed_batch({"persisted"});
  }
  auto provider_b = std::make_shared<MockEmbeddingProvider>(0);
  Embedder embedder(provider_b, std::make_shared<EmbeddingCache>(dir));
  embedder.embed_batch({"persisted"});
  EXPECT_EQ(provider_b->call_count(), 0u);
  std::filesystem::remove_all(dir);
}

TEST(Embedder, BlankTextReportsIndex) {
  Embedder embedder(std::make_shared<MockEmbeddingProvider>(0));
  try {
    embedder.embed_batch({"fine", ""});
    FAIL() << "expected EmptyText";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyText);
    EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
  }
}

TEST(Embedder, NoTextsRejected) {
  Embedder embedder(std::make_shared<MockEmbeddingProvider>(0));
  try {
    embedder.embed_batch({});
    FAIL() << "expected EmptyInput";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

// With caching on vs off, outputs are identical.
TEST(Embedder, CacheTransparency) {
  const auto dir = temp_cache_dir("transparent");
  Embedder cached(std::make_shared<MockEmbeddingProvider>(9),
                  std::make_shared<EmbeddingCache>(dir));
  Embedder uncached(std::make_shared<MockEmbeddingProvider>(9));

  const std::vector<std::string> texts{"one", "two", "one", "three"};
  EXPECT_EQ(cached.embed_batch(texts), uncached.embed_batch(texts));
  // Second pass: fully cached, still identical.
  EXPECT_EQ(cached.embed_batch(texts), uncached.embed_batch(texts));
  std::filesystem::remove_all(dir);
}

TEST(Embedder, DuplicateTextsEmbeddedOnceWithinBatch) {
  auto provider = std::make_shared<MockEmbeddingProvider>(0);
  Embedder embedder(provider);
  const auto out = embedder.embed_batch({"dup", "dup", "dup"});
  EXPECT_EQ(provider->call_count(), 1u);
  EXPECT_EQ(out[0], out[1]);
  EXPECT_EQ(out[0], out[2]);
}
