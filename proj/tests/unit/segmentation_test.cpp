#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "mpv/embedding.hpp"
#include "mpv/error.hpp"
#include "mpv/segmentation.hpp"
#include "fixtures.hpp"

using namespace mpv;
using fixtures::sub;
using fixtures::theme;

namespace {

Transcript words(std::size_t n) {
  Transcript t;
  t.id = "t";
  for (std::size_t i = 0; i < n; ++i) {
    if (i) t.text += (i % 13 == 0) ? "\n" : " ";
    t.text += "w" + std::to_string(i);
  }
  return t;
}

}  // namespace

TEST(CountTokens, Examples) {
  EXPECT_EQ(count_tokens("", TokenizerConfig::whitespace()), 0u);
  EXPECT_EQ(count_tokens("", TokenizerConfig::chars(4.0)), 0u);
  EXPECT_EQ(count_tokens("a b c", TokenizerConfig::whitespace()), 3u);
  EXPECT_EQ(count_tokens(std::string(4100, 'x'), TokenizerConfig::chars(4.0)), 1025u);
  EXPECT_EQ(count_tokens(std::string(4101, 'x'), TokenizerConfig::chars(4.0)), 1026u);
}

TEST(CountTokens, CharsPerTokenCountsCodePoints) {
  // Four two-byte code points.
  EXPECT_EQ(count_tokens("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9", TokenizerConfig::chars(2.0)), 2u);
}

TEST(Segment, ShortTranscriptIsOneSegment) {
  const auto t = words(4096);
  const auto segs = segment(t, 4096, 512, TokenizerConfig::whitespace());
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].text, t.text);
}

TEST(Segment, OneTokenOverTheWindow) {
  const auto t = words(4097);
  const auto segs = segment(t, 4096, 512, TokenizerConfig::whitespace());
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[1].token_start, 3584u);
  EXPECT_EQ(segs[1].token_end, 4097u);
  EXPECT_EQ(segs[1].text.substr(0, 5), "w3584");
}

TEST(Segment, InvalidWindowAndEmpty) {
  const auto t = words(20);
  EXPECT_THROW(segment(t, 10, 12, TokenizerConfig::whitespace()), Error);
  EXPECT_THROW(segment(t, 10, 10, TokenizerConfig::whitespace()), Error);
  EXPECT_THROW(segment(t, 0, 0, TokenizerConfig::whitespace()), Error);
  Transcript empty{"e", "   ", Condition::Expert, {}};
  try {
    segment(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyTranscript);
  }
}

TEST(Segment, CharsModeNeverSplitsWords) {
  Transcript t{"t", "", Condition::Expert, {}};
  for (int i = 0; i < 300; ++i) t.text += "token" + std::to_string(i) + " ";
  const auto segs = segment(t, 100, 20, TokenizerConfig::chars(4.0));
  ASSERT_GT(segs.size(), 1u);
  const auto inside_word = [&](std::size_t pos) {
    return pos > 0 && pos < t.text.size() && t.text[pos - 1] != ' ' && t.text[pos] != ' ';
  };
  for (const auto& s : segs) {
    EXPECT_EQ(t.text.substr(s.byte_begin, s.byte_end - s.byte_begin), s.text);
    EXPECT_FALSE(inside_word(s.byte_begin)) << s.byte_begin;
    EXPECT_FALSE(inside_word(s.byte_end)) << s.byte_end;
  }
}

// Coverage and overlap over random lengths and window shapes.
TEST(SegmentProperty, CoverageAndOverlap) {
  std::mt19937 rng(20240917);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t window = std::uniform_int_distribution<std::size_t>(2, 64)(rng);
    const std::size_t overlap = std::uniform_int_distribution<std::size_t>(0, window - 1)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 400)(rng);
    const auto t = words(n);
    const auto segs = segment(t, window, overlap, TokenizerConfig::whitespace());
    const std::size_t stride = window - overlap;
    const std::size_t expected = n <= window ? 1 : 1 + (n - window + stride - 1) / stride;
    ASSERT_EQ(segs.size(), expected) << "n=" << n << " window=" << window << " overlap=" << overlap;
    std::vector<int> covered(n, 0);
    for (std::size_t k = 0; k < segs.size(); ++k) {
      EXPECT_EQ(segs[k].index, k);
      EXPECT_EQ(segs[k].token_start, k * stride);
      EXPECT_LE(segs[k].token_end - segs[k].token_start, window);
      for (std::size_t i = segs[k].token_start; i < segs[k].token_end; ++i) ++covered[i];
      EXPECT_EQ(count_tokens(segs[k].text, TokenizerConfig::whitespace()),
                segs[k].token_end - segs[k].token_start);
      if (k + 1 < segs.size()) {
        EXPECT_EQ(segs[k].token_end - segs[k + 1].token_start, overlap);
        EXPECT_EQ(segs[k].token_end, segs[k].token_start + window);
      }
    }
    EXPECT_EQ(segs.back().token_end, n);
    for (std::size_t i = 0; i < n; ++i) ASSERT_GE(covered[i], 1) << "token " << i << " uncovered";

    const auto pieces = stride_partition(t, window, overlap, TokenizerConfig::whitespace());
    ASSERT_EQ(pieces.size(), segs.size());
    std::vector<int> owned(n, 0);
    for (const auto& p : pieces)
      for (std::size_t i = p.token_start; i < p.token_end; ++i) ++owned[i];
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(owned[i], 1) << "token " << i;
  }
}

TEST(MergeThemeSets, IdenticalThemesMergeAndQuotesUnion) {
  Embedder embedder(std::make_shared<DeterministicTestEmbedder>(256));
  const auto a = fixtures::themes({theme("T1", "privacy settings are confusing", {sub("ST1", "menus", {"q1"})})});
  const auto b = fixtures::themes({theme("T1", "privacy settings are confusing", {sub("ST1", "menus", {"q2", "q1"})})});
  const auto merged = merge_theme_sets({a, b}, embed_fn(embedder));
  ASSERT_EQ(merged.themes.size(), 1u);
  ASSERT_EQ(merged.themes[0].subthemes.size(), 1u);
  EXPECT_EQ(merged.themes[0].subthemes[0].quotes, (std::vector<std::string>{"q1", "q2"}));
}

TEST(MergeThemeSets, DisjointTopicsAreKeptWithSuffixedIds) {
  Embedder embedder(std::make_shared<DeterministicTestEmbedder>(256));
  const auto a = fixtures::themes({theme("T1", "privacy settings are confusing")});
  const auto b = fixtures::themes({theme("T1", "quantum telescope maintenance")});
  const auto merged = merge_theme_sets({a, b}, embed_fn(embedder));
  ASSERT_EQ(merged.themes.size(), 2u);
  EXPECT_EQ(merged.themes[0].theme_id, "T1");
  EXPECT_EQ(merged.themes[1].theme_id, "T1-s1");
}

TEST(MergeThemeSets, SimilarThemesKeepSegmentZeroId) {
  Embedder embedder(std::make_shared<DeterministicTestEmbedder>(256));
  const std::string a_text = "consent forms are too long to read";
  const std::string b_text = "consent forms are much too long to read";
  ASSERT_GE(embedder.similarity(a_text, b_text), 0.9);
  const auto merged = merge_theme_sets({fixtures::themes({theme("A", a_text)}),
                                        fixtures::themes({theme("B", b_text)}),
                                        fixtures::themes({theme("C", "my bank app wants contacts")})},
                                       embed_fn(embedder));
  ASSERT_EQ(merged.themes.size(), 2u);
  EXPECT_EQ(merged.themes[0].theme_id, "A");
  EXPECT_EQ(merged.themes[0].description, a_text);
  EXPECT_EQ(merged.themes[1].theme_id, "C");
}
