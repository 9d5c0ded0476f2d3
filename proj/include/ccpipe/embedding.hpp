#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccpipe {

using EmbeddingVector = std::vector<double>;

// dot(a,b) / (|a| * |b|), clamped to [-1, 1] against rounding overshoot.
// Throws DimMismatch when sizes differ, ZeroVector when either norm is zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct EmbeddingRequest {
  std::vector<std::string> texts;
  std::string provider_id;
  std::string model_id;
};

// Content address of one embedding: collision-resistant digest over the
// (provider, model, text) triple.
std::string cache_key(std::string_view provider_id, std::string_view model_id,
                      std::string_view text);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  // One vector per input text, same order, uniform dimension.
  virtual std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) = 0;

  virtual const std::string& provider_id() const = 0;
  virtual const std::string& model_id() const = 0;
};

// Deterministic offline embedder: each text maps to a unit vector derived
// from a seeded hash of (model, seed, text). A pure function of its inputs,
// so separate processes with equal seeds produce equal vectors.
class MockEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(std::uint64_t seed = 0, std::size_t dim = 16,
                                 std::string provider_id = "mock",
                                 std::string model_id = "mock-embed-16");

  std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) override;

  const std::string& provider_id() const override { return provider_id_; }
  const std::string& model_id() const override { return model_id_; }

  std::size_t dim() const { return dim_; }
  std::size_t call_count() const { return calls_.load(); }

  static EmbeddingVector vector_for(std::uint64_t seed, std::size_t dim,
                                    std::string_view model_id,
                                    std::string_view text);

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::string provider_id_;
  std::string model_id_;
  std::atomic<std::size_t> calls_{0};
};

// OpenAI-compatible /embeddings endpoint.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string base_url, std::string api_key,
                        std::string model_id,
                        std::string provider_id = "openai");

  std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) override;

  const std::string& provider_id() const override { return provider_id_; }
  const std::string& model_id() const override { return model_id_; }

 private:
  std::string base_url_;
  std::string api_key_;
  std::string model_id_;
  std::string provider_id_;
};

// One file per key under a cache directory. Values for a key are immutable,
// so concurrent writers are idempotent; writes go through temp-file rename.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path dir);

  std::optional<EmbeddingVector> get(const std::string& key) const;
  void put(const std::string& key, const EmbeddingVector& vector);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

// Provider plus optional cache. Previously seen (provider, model, text)
// triples are served without a provider call; cached and uncached paths
// return identical vectors.
class Embedder {
 public:
  explicit Embedder(std::shared_ptr<EmbeddingProvider> provider,
                    std::shared_ptr<EmbeddingCache> cache = nullptr);

  // Validates every text is non-blank (EmptyText with the failing index),
  // serves cache hits, embeds the remaining unique texts in one provider
  // batch, and verifies uniform finite output (DimMismatch/ProviderError).
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);

  EmbeddingVector embed_one(const std::string& text);

  const std::string& provider_id() const { return provider_->provider_id(); }
  const std::string& model_id() const { return provider_->model_id(); }

  // Number of provider batches issued (cache hits excluded).
  std::size_t provider_batches() const { return batches_.load(); }

 private:
  std::shared_ptr<EmbeddingProvider> provider_;
  std::shared_ptr<EmbeddingCache> cache_;
  std::atomic<std::size_t> batches_{0};
};

}  // namespace ccpipe
