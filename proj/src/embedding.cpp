#include "mpv/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include "mpv/domain.hpp"
#include "mpv/error.hpp"
#include "mpv/http.hpp"
#include "mpv/util.hpp"

namespace mpv {

double EmbeddingVector::norm() const noexcept {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

EmbeddingVector normalize(std::vector<double> raw) {
  double s = 0.0;
  for (double v : raw) s += v * v;
  const double n = std::sqrt(s);
  if (n > 0.0)
    for (auto& v : raw) v /= n;
  return EmbeddingVector{std::move(raw)};
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension())
    throw Error(Errc::DimensionMismatch, std::to_string(a.dimension()) + " vs " +
                                             std::to_string(b.dimension()));
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  if (a.values == b.values) return 1.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

EmbeddingProviderConfig EmbeddingProviderConfig::from_json(const nlohmann::json& j) {
  EmbeddingProviderConfig c;
  const auto kind = j.value("kind", std::string("deterministic_test"));
  if (kind == "http") {
    c.kind = Kind::Http;
  } else if (kind == "deterministic_test") {
    c.kind = Kind::DeterministicTest;
  } else {
    throw Error(Errc::ConfigError, "embedding.kind must be \"http\" or \"deterministic_test\"");
  }
  c.base_url = j.value("base_url", c.base_url);
  c.model_id = j.value("model_id", c.model_id);
  c.dimension = j.value("dimension", c.dimension);
  c.similarity_threshold = j.value("similarity_threshold", c.similarity_threshold);
  if (j.contains("sensitivity_thresholds"))
    c.sensitivity_thresholds = j.at("sensitivity_thresholds").get<std::vector<double>>();
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long>(c.timeout.count())));
  c.retry_budget = j.value("retry_budget", c.retry_budget);
  c.backoff_base =
      std::chrono::milliseconds(j.value("backoff_ms", static_cast<long>(c.backoff_base.count())));
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (!(c.similarity_threshold > 0.0 && c.similarity_threshold <= 1.0))
    throw Error(Errc::ConfigError, "embedding.similarity_threshold must be in (0, 1]");
  if (c.kind == Kind::DeterministicTest && c.dimension < 2)
    throw Error(Errc::ConfigError, "embedding.dimension must be >= 2");
  if (c.kind == Kind::Http && c.base_url.empty())
    throw Error(Errc::ConfigError, "embedding.base_url is required for http provider");
  return c;
}

nlohmann::json EmbeddingProviderConfig::to_json() const {
  nlohmann::json j{{"kind", kind == Kind::Http ? "http" : "deterministic_test"},
                   {"similarity_threshold", similarity_threshold},
                   {"sensitivity_thresholds", sensitivity_thresholds}};
  if (kind == Kind::Http) {
    j["base_url"] = base_url;
    j["model_id"] = model_id;
    j["timeout_ms"] = timeout.count();
    j["retry_budget"] = retry_budget;
    j["backoff_ms"] = backoff_base.count();
    if (!api_key_env.empty()) j["api_key_env"] = api_key_env;
  } else {
    j["dimension"] = dimension;
  }
  return j;
}

// ---------------------------------------------------------------------------

DeterministicTestEmbedder::DeterministicTestEmbedder(std::size_t dimension)
    : dimension_(dimension) {
  if (dimension_ < 2) throw Error(Errc::InvalidArgument, "dimension must be >= 2");
}

std::vector<std::vector<double>> DeterministicTestEmbedder::embed_raw(
    std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const std::string padded = " " + to_lower_ascii(text) + " ";
    std::vector<double> v(dimension_, 0.0);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i)
      v[fnv1a64(std::string_view(padded).substr(i, 3)) % dimension_] += 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

std::string DeterministicTestEmbedder::identity() const {
  return "deterministic-trigram-" + std::to_string(dimension_);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(EmbeddingProviderConfig config)
    : config_(std::move(config)) {}

std::string HttpEmbeddingProvider::identity() const {
  return "http:" + config_.model_id + "@" + config_.base_url;
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed_raw(
    std::span<const std::string> texts) {
  nlohmann::json body{{"model", config_.model_id}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  HttpRequestOptions options;
  options.timeout = config_.timeout;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
      options.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  const auto payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retry_budget; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(config_.backoff_base * (1 << std::min(attempt - 1, 10)));
    try {
      const auto resp = http_post_json(config_.base_url, "/v1/embeddings", payload, options);
      if (resp.status < 200 || resp.status >= 300) {
        last_error = "HTTP " + std::to_string(resp.status);
        continue;
      }
      const auto j = nlohmann::json::parse(resp.body);
      const auto& data = j.at("data");
      if (data.size() != texts.size())
        throw Error(Errc::EmbeddingUnavailable, "embedding count mismatch");
      std::vector<std::vector<double>> out(texts.size());
      for (const auto& item : data) {
        const auto idx = item.value("index", static_cast<std::size_t>(&item - &data[0]));
        if (idx >= out.size()) throw Error(Errc::EmbeddingUnavailable, "bad embedding index");
        out[idx] = item.at("embedding").get<std::vector<double>>();
      }
      return out;
    } catch (const TransportError& e) {
      last_error = e.what();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::EmbeddingUnavailable, std::string("malformed embedding response: ") + e.what());
    }
  }
  throw Error(Errc::EmbeddingUnavailable, last_error);
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingProviderConfig& config) {
  if (config.kind == EmbeddingProviderConfig::Kind::Http)
    return std::make_unique<HttpEmbeddingProvider>(config);
  return std::make_unique<DeterministicTestEmbedder>(config.dimension);
}

// ---------------------------------------------------------------------------

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider) : provider_(std::move(provider)) {
  if (!provider_) throw Error(Errc::InvalidArgument, "null embedding provider");
}

EmbeddingVector Embedder::embed(std::string_view text) {
  const std::string s(text);
  return embed_batch(std::span<const std::string>(&s, 1)).front();
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) {
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) {
    if (collapse_whitespace(t).empty()) throw Error(Errc::EmptyText, "cannot embed empty text");
    keys.push_back(sha256_hex(t));
  }

  std::vector<std::string> missing;
  std::vector<std::string> missing_keys;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!cache_.contains(keys[i]) &&
          std::find(missing_keys.begin(), missing_keys.end(), keys[i]) == missing_keys.end()) {
        missing.push_back(texts[i]);
        missing_keys.push_back(keys[i]);
      }
    }
  }
  if (!missing.empty()) {
    // Computed outside the lock; a concurrent duplicate computation yields the
    // same vector and the first insert wins.
    auto raw = provider_->embed_raw(missing);
    std::lock_guard lock(mutex_);
    ++provider_calls_;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      for (double v : raw[i])
        if (!std::isfinite(v)) throw Error(Errc::EmbeddingUnavailable, "non-finite embedding");
      cache_.try_emplace(missing_keys[i], normalize(std::move(raw[i])));
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::lock_guard lock(mutex_);
  for (const auto& k : keys) out.push_back(cache_.at(k));
  return out;
}

double Embedder::similarity(std::string_view a, std::string_view b) {
  return cosine(embed(a), embed(b));
}

bool Embedder::semantic_match(std::string_view a, std::string_view b, double threshold) {
  return similarity(a, b) >= threshold;
}

std::size_t Embedder::provider_calls() const {
  std::lock_guard lock(mutex_);
  return provider_calls_;
}

void Embedder::load_cache(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) return;
  std::string line;
  std::lock_guard lock(mutex_);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      cache_.try_emplace(j.at("sha256").get<std::string>(),
                         EmbeddingVector{j.at("vector").get<std::vector<double>>()});
    } catch (const nlohmann::json::exception&) {
      // A torn last line from an interrupted write is skipped.
    }
  }
}

void Embedder::save_cache(const std::filesystem::path& file) const {
  std::map<std::string, const EmbeddingVector*> sorted;
  std::lock_guard lock(mutex_);
  for (const auto& [k, v] : cache_) sorted.emplace(k, &v);
  std::string out;
  for (const auto& [k, v] : sorted) {
    out += nlohmann::json{{"sha256", k}, {"vector", v->values}}.dump();
    out += '\n';
  }
  write_file_atomic(file, out);
}

}  // namespace mpv
