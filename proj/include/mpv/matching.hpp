#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mpv/domain.hpp"
#include "mpv/embedding.hpp"
#include "mpv/metrics.hpp"
#include "mpv/util.hpp"

namespace mpv {

inline constexpr double kDefaultSimilarityThreshold = 0.80;

struct NormalizationConfig {
  enum class Stemmer { SuffixLight, None };

  bool lowercase = true;
  Stemmer stemmer = Stemmer::SuffixLight;
  std::shared_ptr<const std::set<std::string>> stopwords;

  /// Lowercasing, the bundled English stopword list, SuffixLight stemming.
  static NormalizationConfig defaults();
  /// Stopwords from a file with one word per line; blank lines and `#` lines
  /// are skipped.
  static NormalizationConfig with_stopword_file(const std::filesystem::path& file,
                                                Stemmer stemmer = Stemmer::SuffixLight);
};

const std::set<std::string>& default_stopwords();

/// Strips one of ing, ed, es, s (first that applies) if at least three
/// characters remain. A trailing "ss" is kept.
std::string stem_suffix_light(const std::string& token);

std::vector<std::string> normalize_tokens(std::string_view text,
                                          const NormalizationConfig& cfg = NormalizationConfig::defaults());
std::string normalize_keyword(std::string_view text,
                              const NormalizationConfig& cfg = NormalizationConfig::defaults());

/// Token-boundary containment of two already normalized strings. An empty
/// needle is never contained.
bool normalized_contains(const std::string& haystack, const std::string& needle);

// ---------------------------------------------------------------------------
// Two-stage matching

enum class MatchMethod { Exact, Embedding };
std::string_view to_string(MatchMethod m) noexcept;

struct MatchPair {
  std::string model_id;
  std::string gold_id;
  MatchMethod method = MatchMethod::Exact;
  double similarity = 1.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  int tp = 0;
  int fp = 0;
  int fn = 0;

  ConfusionCounts counts() const { return {tp, fp, fn}; }
  const MatchPair* by_model(std::string_view id) const;
  const MatchPair* by_gold(std::string_view id) const;
};

struct MatchItem {
  std::string id;
  std::string text;
};

/// Stage 1 pairs items whose normalized texts are equal and non-empty, in
/// (model id, gold id) order. Stage 2 ranks the remaining pairs by cosine
/// similarity, descending, ties by (model id, gold id), and accepts greedily
/// while similarity >= threshold.
MatchResult match_items(const std::vector<MatchItem>& model, const std::vector<MatchItem>& gold,
                        const EmbedFn& embed, double threshold = kDefaultSimilarityThreshold,
                        const NormalizationConfig& cfg = NormalizationConfig::defaults());

MatchResult match_themes(const ThemeSet& model, const std::vector<Theme>& gold, const EmbedFn& embed,
                         double threshold = kDefaultSimilarityThreshold,
                         const NormalizationConfig& cfg = NormalizationConfig::defaults());

/// Model-to-gold id correspondence for themes and, within matched theme
/// pairs, subthemes.
struct IdMapping {
  MatchResult themes;
  /// (model theme id, model subtheme id) -> gold subtheme id
  std::map<std::pair<std::string, std::string>, std::string> subthemes;

  std::optional<std::string> gold_theme(const std::string& model_theme) const;
  std::optional<std::string> gold_subtheme(const std::string& model_theme,
                                           const std::string& model_subtheme) const;
};

IdMapping build_id_mapping(const ThemeSet& model, const std::vector<Theme>& gold,
                           const EmbedFn& embed, double threshold = kDefaultSimilarityThreshold,
                           const NormalizationConfig& cfg = NormalizationConfig::defaults());

// ---------------------------------------------------------------------------
// Statements and grounding

/// One ThemeAssertion per theme and subtheme (ids "A:T1", "A:T1/ST1"), then one
/// FrequencyClaim per count entry ("F:T1", "F:T1/ST1").
std::vector<Statement> segment_statements(const ThemeSet& themes, const FrequencyReport& freq,
                                          const std::string& transcript_id = {},
                                          const std::string& stage = "final");

/// Normalized transcript plus its sentences, with sentence embeddings computed
/// on first use.
class GroundingIndex {
 public:
  GroundingIndex(std::string transcript_text, EmbedFn embed,
                 NormalizationConfig cfg = NormalizationConfig::defaults());

  const std::string& text() const { return text_; }
  const std::string& normalized() const { return normalized_; }
  const std::vector<TextSpan>& sentences() const { return sentences_; }
  const NormalizationConfig& config() const { return cfg_; }

  /// Best sentence by cosine similarity, or nullopt when there is none.
  std::optional<std::pair<std::size_t, double>> best_sentence(const std::string& text) const;
  /// Containment span: the first sentence whose normalized form contains the
  /// normalized needle.
  std::optional<SpanRef> containing_sentence(const std::string& normalized_needle) const;
  EmbeddingVector embed(const std::string& text) const { return embed_(text); }

 private:
  std::string text_;
  EmbedFn embed_;
  NormalizationConfig cfg_;
  std::string normalized_;
  std::vector<TextSpan> sentences_;
  std::vector<std::string> normalized_sentences_;
  mutable std::vector<std::optional<EmbeddingVector>> sentence_vectors_;
};

/// Containment first, then best-sentence embedding similarity. Throws
/// InvalidArgument for a FrequencyClaim.
GroundingStatus ground_statement(const Statement& s, const GroundingIndex& index,
                                 double threshold = kDefaultSimilarityThreshold);
GroundingStatus ground_statement(const Statement& s, const std::string& transcript_text,
                                 const EmbedFn& embed, double threshold = kDefaultSimilarityThreshold);

/// |claimed - gold| <= 10% of gold, inclusive; gold 0 requires claimed 0.
bool within_frequency_tolerance(std::int64_t claimed, std::int64_t gold_count);

/// Throws InvalidArgument unless `claim` is a FrequencyClaim. Claims on ids
/// without a gold counterpart (or without a gold count) are Unsupported.
GroundingStatus classify_frequency_claim(const Statement& claim, const GoldStandard& gold,
                                         const IdMapping& mapping);

struct KeywordOmissions {
  std::vector<std::string> missed;
  std::vector<std::string> found;
};

KeywordOmissions keyword_omissions(const std::vector<std::string>& gold_keywords,
                                   const std::vector<std::string>& model_keywords,
                                   const EmbedFn& embed,
                                   double threshold = kDefaultSimilarityThreshold,
                                   const NormalizationConfig& cfg = NormalizationConfig::defaults());

std::vector<std::string> keyword_inventions(const std::vector<std::string>& model_keywords,
                                            const GroundingIndex& transcript,
                                            const std::vector<std::string>& gold_keywords,
                                            double threshold = kDefaultSimilarityThreshold);

/// Theme and subtheme descriptions, whitespace-collapsed, first occurrence
/// kept.
std::vector<std::string> model_keywords(const ThemeSet& themes);

/// Quotes present in both model output and gold, labelled with the
/// first-listed theme on each side.
struct QuoteAlignment {
  ClusterLabeling labeling;
  std::size_t model_quotes = 0;
  std::size_t gold_quotes = 0;
  std::size_t excluded_model = 0;
  std::size_t excluded_gold = 0;
};

QuoteAlignment align_quotes(const ThemeSet& model, const GoldStandard& gold, const EmbedFn& embed,
                            double threshold = kDefaultSimilarityThreshold,
                            const NormalizationConfig& cfg = NormalizationConfig::defaults());

}  // namespace mpv
