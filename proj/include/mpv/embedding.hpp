#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpv {

/// Unit-normalized embedding. Construct through `normalize` or a provider.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }
  double norm() const noexcept;
  bool operator==(const EmbeddingVector&) const = default;
};

/// L2-normalizes `raw`. A zero vector is returned unchanged.
EmbeddingVector normalize(std::vector<double> raw);

/// dot(a,b)/(|a||b|), clamped to [-1, 1]. Identical non-zero vectors give
/// exactly 1.0. Throws DimensionMismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct EmbeddingProviderConfig {
  enum class Kind { Http, DeterministicTest };
  Kind kind = Kind::DeterministicTest;
  std::string base_url;
  std::string model_id = "BAAI/bge-large-en-v1.5";
  std::size_t dimension = 1024;
  double similarity_threshold = 0.80;
  std::vector<double> sensitivity_thresholds{0.70, 0.90};
  std::chrono::milliseconds timeout{60'000};
  int retry_budget = 3;
  std::chrono::milliseconds backoff_base{500};
  std::string api_key_env;  // optional; value sent as a Bearer token

  static EmbeddingProviderConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// Raw (possibly unnormalized) vectors, one per input, same order.
  virtual std::vector<std::vector<double>> embed_raw(std::span<const std::string> texts) = 0;
  /// Stable identity string recorded in run manifests.
  virtual std::string identity() const = 0;
};

/// Hashed character-trigram bag: the lowercased text, padded with one space on
/// each side, contributes one count per byte trigram to bucket
/// fnv1a64(trigram) % dimension. Offline and fully deterministic.
class DeterministicTestEmbedder final : public EmbeddingProvider {
 public:
  explicit DeterministicTestEmbedder(std::size_t dimension = 1024);
  std::vector<std::vector<double>> embed_raw(std::span<const std::string> texts) override;
  std::string identity() const override;

 private:
  std::size_t dimension_;
};

/// OpenAI-compatible /v1/embeddings client.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(EmbeddingProviderConfig config);
  std::vector<std::vector<double>> embed_raw(std::span<const std::string> texts) override;
  std::string identity() const override;

 private:
  EmbeddingProviderConfig config_;
};

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingProviderConfig& config);

/// Caching front end shared by merging, matching, grounding, SDS and TCS.
/// Thread-safe; the cache is keyed by the exact text.
class Embedder {
 public:
  explicit Embedder(std::shared_ptr<EmbeddingProvider> provider);

  EmbeddingVector embed(std::string_view text);
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);
  bool semantic_match(std::string_view a, std::string_view b, double threshold);
  double similarity(std::string_view a, std::string_view b);

  std::string identity() const { return provider_->identity(); }
  std::size_t provider_calls() const;

  /// JSON-lines cache: one {"sha256": ..., "vector": [...]} per line, sorted by
  /// hash so the file is byte-stable across runs.
  void load_cache(const std::filesystem::path& file);
  void save_cache(const std::filesystem::path& file) const;

 private:
  std::shared_ptr<EmbeddingProvider> provider_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> cache_;  // sha256(text) -> vector
  std::size_t provider_calls_ = 0;
};

using EmbedFn = std::function<EmbeddingVector(const std::string&)>;

inline EmbedFn embed_fn(Embedder& embedder) {
  return [&embedder](const std::string& text) { return embedder.embed(text); };
}

}  // namespace mpv
