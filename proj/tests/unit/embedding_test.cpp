#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "fixtures.hpp"
#include "mpv/embedding.hpp"
#include "mpv/error.hpp"

using namespace mpv;

namespace {

Embedder test_embedder() { return Embedder(std::make_shared<DeterministicTestEmbedder>(256)); }

}  // namespace

TEST(Cosine, HandCases) {
  const auto x = normalize({1, 0});
  const auto y = normalize({0, 1});
  const auto d = normalize({std::sqrt(2.0) / 2, std::sqrt(2.0) / 2});
  EXPECT_EQ(cosine(x, x), 1.0);
  EXPECT_EQ(cosine(x, y), 0.0);
  EXPECT_NEAR(cosine(x, d), 0.70710678, 1e-8);
  EXPECT_THROW(cosine(x, normalize({1, 0, 0})), Error);
}

TEST(Embedder, UnitNormAndDeterminism) {
  auto e = test_embedder();
  for (const char* text : {"alpha", "The consent forms are too long", "x", "\xC3\xA9t\xC3\xA9"}) {
    const auto v = e.embed(text);
    EXPECT_NEAR(v.norm(), 1.0, 1e-6) << text;
    EXPECT_EQ(v, e.embed(text));
  }
  EXPECT_EQ(e.similarity("alpha", "alpha"), 1.0);
  auto other = test_embedder();
  EXPECT_EQ(e.embed("beta gamma"), other.embed("beta gamma"));
}

TEST(Embedder, EmptyTextIsRejected) {
  auto e = test_embedder();
  try {
    e.embed("   ");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::EmptyText);
  }
}

TEST(Embedder, CachesByText) {
  auto e = test_embedder();
  e.embed("one");
  e.embed("one");
  e.embed("two");
  EXPECT_EQ(e.provider_calls(), 2u);
}

TEST(Embedder, SemanticMatchThresholds) {
  auto e = test_embedder();
  EXPECT_TRUE(e.semantic_match("same words", "same words", 1.0));
  const std::string a = "worry about data brokers selling my profile";
  const std::string b = "worries about data brokers selling profiles";
  const double sim = e.similarity(a, b);
  ASSERT_GT(sim, 0.80);
  ASSERT_LT(sim, 0.90);
  EXPECT_TRUE(e.semantic_match(a, b, 0.80));
  EXPECT_FALSE(e.semantic_match(a, b, 0.90));
  EXPECT_FALSE(e.semantic_match(a, b, 1.0));
}

TEST(Embedder, CacheFileRoundTripIsByteStable) {
  fixtures::TempDir dir;
  auto e = test_embedder();
  for (const char* t : {"zeta", "alpha", "mu"}) e.embed(t);
  e.save_cache(dir / "a.jsonl");

  auto f = test_embedder();
  f.load_cache(dir / "a.jsonl");
  EXPECT_EQ(f.embed("alpha"), e.embed("alpha"));
  EXPECT_EQ(f.provider_calls(), 0u);
  f.save_cache(dir / "b.jsonl");
  EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
}

TEST(EmbeddingConfig, Validation) {
  EXPECT_THROW(EmbeddingProviderConfig::from_json({{"kind", "other"}}), Error);
  EXPECT_THROW(EmbeddingProviderConfig::from_json({{"similarity_threshold", 1.5}}), Error);
  EXPECT_THROW(EmbeddingProviderConfig::from_json({{"kind", "http"}}), Error);
  const auto c = EmbeddingProviderConfig::from_json({{"dimension", 64}});
  EXPECT_EQ(c.dimension, 64u);
  EXPECT_EQ(EmbeddingProviderConfig::from_json(c.to_json()).dimension, 64u);
}

TEST(HttpEmbeddingProvider, UnreachableServerFails) {
  EmbeddingProviderConfig c;
  c.kind = EmbeddingProviderConfig::Kind::Http;
  c.base_url = "http://127.0.0.1:9";
  c.retry_budget = 1;
  c.backoff_base = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(500);
  Embedder e(make_embedding_provider(c));
  try {
    e.embed("text");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::EmbeddingUnavailable);
  }
}
