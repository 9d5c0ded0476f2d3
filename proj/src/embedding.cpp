#include "ccpipe/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ccpipe/errors.hpp"
#include "ccpipe/http_client.hpp"
#include "ccpipe/util.hpp"

namespace ccpipe {

using nlohmann::json;

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw PipelineError(ErrorCode::DimMismatch,
                        "vector dims differ: " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    norm_a += a[i] * a[i];
    norm_b += b[i] * b[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw PipelineError(ErrorCode::ZeroVector,
                        "cosine undefined for a zero vector");
  }
  const double value = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
  return std::clamp(value, -1.0, 1.0);
}

std::string cache_key(std::string_view provider_id, std::string_view model_id,
                      std::string_view text) {
  return sha256_hex({provider_id, model_id, text});
}

MockEmbeddingProvider::MockEmbeddingProvider(std::uint64_t seed,
                                             std::size_t dim,
                                             std::string provider_id,
                                             std::string model_id)
    : seed_(seed),
      dim_(dim),
      provider_id_(std::move(provider_id)),
      model_id_(std::move(model_id)) {}

EmbeddingVector MockEmbeddingProvider::vector_for(std::uint64_t seed,
                                                  std::size_t dim,
                                                  std::string_view model_id,
                                                  std::string_view text) {
  char seed_bytes[16];
  std::snprintf(seed_bytes, sizeof(seed_bytes), "%llx",
                static_cast<unsigned long long>(seed));
  const std::string digest = sha256_hex({model_id, seed_bytes, text});

  // First 16 hex chars of the digest seed a mt19937_64; raw 64-bit draws map
  // to [-1, 1) without std::uniform_real_distribution, whose output is
  // implementation-defined.
  std::uint64_t engine_seed = 0;
  for (int i = 0; i < 16; ++i) {
    const char c = digest[i];
    engine_seed =
        (engine_seed << 4) | static_cast<std::uint64_t>(
                                 c <= '9' ? c - '0' : c - 'a' + 10);
  }
  std::mt19937_64 engine(engine_seed);

  EmbeddingVector v(dim);
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double unit = static_cast<double>(engine() >> 11) /
                        9007199254740992.0;  // [0, 1) with 53 bits
    v[i] = 2.0 * unit - 1.0;
    norm_sq += v[i] * v[i];
  }
  if (norm_sq < 1e-24) {
    v[0] = 1.0;
    norm_sq = 1.0;
  }
  const double inv_norm = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) {
    x *= inv_norm;
  }
  return v;
}

std::vector<EmbeddingVector> MockEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
  calls_.fetch_add(1);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    out.push_back(vector_for(seed_, dim_, model_id_, text));
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url,
                                             std::string api_key,
                                             std::string model_id,
                                             std::string provider_id)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      model_id_(std::move(model_id)),
      provider_id_(std::move(provider_id)) {}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
  json body;
  body["model"] = model_id_;
  body["input"] = texts;

  const json reply = http_post_json(base_url_, "/embeddings", api_key_, body);

  if (!reply.contains("data") || !reply["data"].is_array()) {
    throw PipelineError(ErrorCode::ProviderError,
                        "embedding response lacks 'data' array");
  }
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<bool> filled(texts.size(), false);
  for (const auto& item : reply["data"]) {
    if (!item.contains("index") || !item.contains("embedding")) {
      throw PipelineError(ErrorCode::ProviderError,
                          "embedding item lacks index/embedding");
    }
    const std::size_t index = item["index"].get<std::size_t>();
    if (index >= out.size()) {
      throw PipelineError(ErrorCode::ProviderError,
                          "embedding index out of range");
    }
    out[index] = item["embedding"].get<EmbeddingVector>();
    filled[index] = true;
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
    throw PipelineError(ErrorCode::ProviderError,
                        "embedding response missing items");
  }
  return out;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path dir)
    : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw PipelineError(ErrorCode::IoError,
                        "cannot create cache dir " + dir_.string() + ": " +
                            ec.message());
  }
}

std::optional<EmbeddingVector> EmbeddingCache::get(
    const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  std::lock_guard<std::mutex> lock(mutex_);
  if (!std::filesystem::exists(path)) {
    return std::nullopt;
  }
  try {
    const json doc = json::parse(read_text_file(path));
    EmbeddingVector v = doc.at("values").get<EmbeddingVector>();
    if (v.size() != doc.at("dim").get<std::size_t>() || v.empty()) {
      return std::nullopt;  // corrupt record: treat as a miss, recompute
    }
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void EmbeddingCache::put(const std::string& key, const EmbeddingVector& vector) {
  json doc;
  doc["dim"] = vector.size();
  doc["values"] = vector;
  std::lock_guard<std::mutex> lock(mutex_);
  write_text_file(dir_ / (key + ".json"), doc.dump());
}

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider,
                   std::shared_ptr<EmbeddingCache> cache)
    : provider_(std::move(provider)), cache_(std::move(cache)) {}

std::vector<EmbeddingVector> Embedder::embed_batch(
    const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw PipelineError(ErrorCode::EmptyInput, "embed_batch given no texts");
  }
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (is_blank(texts[i])) {
      throw PipelineError(ErrorCode::EmptyText,
                          "text at index " + std::to_string(i) + " is blank");
    }
  }

  std::vector<EmbeddingVector> out(texts.size());
  std::vector<bool> resolved(texts.size(), false);

  if (cache_) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto key =
          cache_key(provider_->provider_id(), provider_->model_id(), texts[i]);
      if (auto hit = cache_->get(key)) {
        out[i] = std::move(*hit);
        resolved[i] = true;
      }
    }
  }

  // Unique unresolved texts, first-occurrence order.
  std::vector<std::string> misses;
  std::unordered_map<std::string, std::size_t> miss_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!resolved[i] && !miss_index.count(texts[i])) {
      miss_index.emplace(texts[i], misses.size());
      misses.push_back(texts[i]);
    }
  }

  if (!misses.empty()) {
    batches_.fetch_add(1);
    const auto vectors = provider_->embed(misses);
    if (vectors.size() != misses.size()) {
      throw PipelineError(ErrorCode::ProviderError,
                          "provider returned " + std::to_string(vectors.size()) +
                              " vectors for " + std::to_string(misses.size()) +
                              " texts");
    }
    const std::size_t dim = vectors.front().size();
    for (const auto& v : vectors) {
      if (v.size() != dim || dim == 0) {
        throw PipelineError(ErrorCode::DimMismatch,
                            "provider returned inconsistent dims");
      }
      for (double x : v) {
        if (!std::isfinite(x)) {
          throw PipelineError(ErrorCode::ProviderError,
                              "provider returned non-finite component");
        }
      }
    }
    if (cache_) {
      for (std::size_t m = 0; m < misses.size(); ++m) {
        cache_->put(cache_key(provider_->provider_id(), provider_->model_id(),
                              misses[m]),
                    vectors[m]);
      }
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!resolved[i]) {
        out[i] = vectors[miss_index.at(texts[i])];
        resolved[i] = true;
      }
    }
  }
  return out;
}

EmbeddingVector Embedder::embed_one(const std::string& text) {
  return embed_batch({text}).front();
}

}  // namespace ccpipe
