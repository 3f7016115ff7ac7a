#include "mpv/matching.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <tuple>

#include "mpv/error.hpp"

namespace mpv {

namespace detail {
std::string_view embedded_stopwords();
}

namespace {

std::set<std::string> parse_stopwords(std::string_view body) {
  std::set<std::string> words;
  std::istringstream in{std::string(body)};
  std::string line;
  while (std::getline(in, line)) {
    auto w = to_lower_ascii(collapse_whitespace(line));
    if (w.empty() || w.front() == '#') continue;
    words.insert(std::move(w));
  }
  return words;
}

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = parse_stopwords(detail::embedded_stopwords());
  return words;
}

NormalizationConfig NormalizationConfig::defaults() {
  static const auto shared = std::make_shared<const std::set<std::string>>(default_stopwords());
  NormalizationConfig cfg;
  cfg.stopwords = shared;
  return cfg;
}

NormalizationConfig NormalizationConfig::with_stopword_file(const std::filesystem::path& file,
                                                            Stemmer stemmer) {
  NormalizationConfig cfg;
  cfg.stemmer = stemmer;
  cfg.stopwords = std::make_shared<const std::set<std::string>>(parse_stopwords(read_file(file)));
  return cfg;
}

std::string stem_suffix_light(const std::string& token) {
  static constexpr std::string_view kSuffixes[] = {"ing", "ed", "es", "s"};
  for (auto suffix : kSuffixes) {
    if (!ends_with(token, suffix)) continue;
    if (suffix == "s" && ends_with(token, "ss")) return token;
    if (token.size() - suffix.size() >= 3) return token.substr(0, token.size() - suffix.size());
  }
  return token;
}

std::vector<std::string> normalize_tokens(std::string_view text, const NormalizationConfig& cfg) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (!cfg.stopwords || !cfg.stopwords->contains(current)) {
      tokens.push_back(cfg.stemmer == NormalizationConfig::Stemmer::SuffixLight
                           ? stem_suffix_light(current)
                           : current);
    }
    current.clear();
  };
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(cfg.lowercase && c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                                              : static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string normalize_keyword(std::string_view text, const NormalizationConfig& cfg) {
  std::string out;
  for (const auto& t : normalize_tokens(text, cfg)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

bool normalized_contains(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return false;
  return (" " + haystack + " ").find(" " + needle + " ") != std::string::npos;
}

std::string_view to_string(MatchMethod m) noexcept {
  return m == MatchMethod::Exact ? "exact" : "embedding";
}

const MatchPair* MatchResult::by_model(std::string_view id) const {
  for (const auto& p : pairs)
    if (p.model_id == id) return &p;
  return nullptr;
}

const MatchPair* MatchResult::by_gold(std::string_view id) const {
  for (const auto& p : pairs)
    if (p.gold_id == id) return &p;
  return nullptr;
}

MatchResult match_items(const std::vector<MatchItem>& model, const std::vector<MatchItem>& gold,
                        const EmbedFn& embed, double threshold, const NormalizationConfig& cfg) {
  MatchResult result;
  std::vector<bool> model_used(model.size(), false), gold_used(gold.size(), false);

  std::vector<std::size_t> model_order(model.size()), gold_order(gold.size());
  for (std::size_t i = 0; i < model.size(); ++i) model_order[i] = i;
  for (std::size_t j = 0; j < gold.size(); ++j) gold_order[j] = j;
  std::stable_sort(model_order.begin(), model_order.end(),
                   [&](auto a, auto b) { return model[a].id < model[b].id; });
  std::stable_sort(gold_order.begin(), gold_order.end(),
                   [&](auto a, auto b) { return gold[a].id < gold[b].id; });

  std::vector<std::string> model_norm, gold_norm;
  for (const auto& m : model) model_norm.push_back(normalize_keyword(m.text, cfg));
  for (const auto& g : gold) gold_norm.push_back(normalize_keyword(g.text, cfg));

  for (auto i : model_order) {
    if (model_norm[i].empty()) continue;
    for (auto j : gold_order) {
      if (gold_used[j] || gold_norm[j] != model_norm[i]) continue;
      model_used[i] = gold_used[j] = true;
      result.pairs.push_back({model[i].id, gold[j].id, MatchMethod::Exact, 1.0});
      break;
    }
  }

  struct Candidate {
    double similarity;
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  std::vector<std::optional<EmbeddingVector>> gold_vec(gold.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (model_used[i] || collapse_whitespace(model[i].text).empty()) continue;
    const auto mv = embed(model[i].text);
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (gold_used[j] || collapse_whitespace(gold[j].text).empty()) continue;
      if (!gold_vec[j]) gold_vec[j] = embed(gold[j].text);
      candidates.push_back({cosine(mv, *gold_vec[j]), i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return std::tie(model[a.i].id, gold[a.j].id) < std::tie(model[b.i].id, gold[b.j].id);
  });
  for (const auto& c : candidates) {
    if (c.similarity < threshold) break;
    if (model_used[c.i] || gold_used[c.j]) continue;
    model_used[c.i] = gold_used[c.j] = true;
    result.pairs.push_back({model[c.i].id, gold[c.j].id, MatchMethod::Embedding, c.similarity});
  }

  result.tp = static_cast<int>(result.pairs.size());
  result.fp = static_cast<int>(model.size()) - result.tp;
  result.fn = static_cast<int>(gold.size()) - result.tp;
  return result;
}

MatchResult match_themes(const ThemeSet& model, const std::vector<Theme>& gold, const EmbedFn& embed,
                         double threshold, const NormalizationConfig& cfg) {
  std::vector<MatchItem> m, g;
  for (const auto& t : model.themes) m.push_back({t.theme_id, t.description});
  for (const auto& t : gold) g.push_back({t.theme_id, t.description});
  return match_items(m, g, embed, threshold, cfg);
}

std::optional<std::string> IdMapping::gold_theme(const std::string& model_theme) const {
  if (const auto* p = themes.by_model(model_theme)) return p->gold_id;
  return std::nullopt;
}

std::optional<std::string> IdMapping::gold_subtheme(const std::string& model_theme,
                                                    const std::string& model_subtheme) const {
  auto it = subthemes.find({model_theme, model_subtheme});
  if (it == subthemes.end()) return std::nullopt;
  return it->second;
}

IdMapping build_id_mapping(const ThemeSet& model, const std::vector<Theme>& gold,
                           const EmbedFn& embed, double threshold, const NormalizationConfig& cfg) {
  IdMapping mapping;
  mapping.themes = match_themes(model, gold, embed, threshold, cfg);
  for (const auto& pair : mapping.themes.pairs) {
    const Theme* mt = model.find(pair.model_id);
    const Theme* gt = nullptr;
    for (const auto& t : gold)
      if (t.theme_id == pair.gold_id) gt = &t;
    if (!mt || !gt) continue;
    std::vector<MatchItem> ms, gs;
    for (const auto& s : mt->subthemes) ms.push_back({s.subtheme_id, s.description});
    for (const auto& s : gt->subthemes) gs.push_back({s.subtheme_id, s.description});
    for (const auto& sp : match_items(ms, gs, embed, threshold, cfg).pairs)
      mapping.subthemes[{pair.model_id, sp.model_id}] = sp.gold_id;
  }
  return mapping;
}

// ---------------------------------------------------------------------------

std::vector<Statement> segment_statements(const ThemeSet& themes, const FrequencyReport& freq,
                                          const std::string& transcript_id,
                                          const std::string& stage) {
  std::vector<Statement> out;
  const StatementSource source{transcript_id, stage};
  for (const auto& t : themes.themes) {
    out.push_back({"A:" + t.theme_id, StatementKind::ThemeAssertion, t.description, source, {}});
    for (const auto& st : t.subthemes)
      out.push_back({"A:" + t.theme_id + "/" + st.subtheme_id, StatementKind::ThemeAssertion,
                     st.description, source, {}});
  }
  for (const auto& e : freq.entries) {
    const Theme* theme = themes.find(e.theme_id);
    const std::string label = theme ? theme->description : e.theme_id;
    out.push_back({"F:" + e.theme_id, StatementKind::FrequencyClaim,
                   label + " (count " + std::to_string(e.count) + ")", source,
                   FrequencyClaim{e.theme_id, std::nullopt, e.count}});
    for (const auto& s : e.subthemes) {
      const Subtheme* st = theme ? theme->find_subtheme(s.subtheme_id) : nullptr;
      const std::string sub_label = st ? st->description : e.theme_id + "/" + s.subtheme_id;
      out.push_back({"F:" + e.theme_id + "/" + s.subtheme_id, StatementKind::FrequencyClaim,
                     sub_label + " (count " + std::to_string(s.count) + ")", source,
                     FrequencyClaim{e.theme_id, s.subtheme_id, s.count}});
    }
  }
  return out;
}

GroundingIndex::GroundingIndex(std::string transcript_text, EmbedFn embed, NormalizationConfig cfg)
    : text_(std::move(transcript_text)), embed_(std::move(embed)), cfg_(std::move(cfg)) {
  normalized_ = normalize_keyword(text_, cfg_);
  sentences_ = split_sentences(text_);
  for (const auto& s : sentences_) normalized_sentences_.push_back(normalize_keyword(s.text, cfg_));
  sentence_vectors_.resize(sentences_.size());
}

std::optional<std::pair<std::size_t, double>> GroundingIndex::best_sentence(
    const std::string& text) const {
  if (sentences_.empty() || collapse_whitespace(text).empty()) return std::nullopt;
  const auto v = embed_(text);
  std::optional<std::pair<std::size_t, double>> best;
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    if (!sentence_vectors_[i]) sentence_vectors_[i] = embed_(sentences_[i].text);
    const double sim = cosine(v, *sentence_vectors_[i]);
    if (!best || sim > best->second) best = std::make_pair(i, sim);
  }
  return best;
}

std::optional<SpanRef> GroundingIndex::containing_sentence(const std::string& needle) const {
  for (std::size_t i = 0; i < sentences_.size(); ++i)
    if (normalized_contains(normalized_sentences_[i], needle))
      return SpanRef{sentences_[i].begin, sentences_[i].end};
  return std::nullopt;
}

GroundingStatus ground_statement(const Statement& s, const GroundingIndex& index, double threshold) {
  if (s.kind != StatementKind::ThemeAssertion)
    throw Error(Errc::InvalidArgument, "ground_statement expects a theme assertion: " + s.id);
  GroundingStatus g;
  const auto norm = normalize_keyword(s.text, index.config());
  if (normalized_contains(index.normalized(), norm)) {
    g.status = SupportStatus::Supported;
    g.method = GroundingMethod::Containment;
    g.evidence = index.containing_sentence(norm);
    g.similarity = 1.0;
    return g;
  }
  g.method = GroundingMethod::Embedding;
  g.status = SupportStatus::Unsupported;
  if (auto best = index.best_sentence(s.text)) {
    g.similarity = best->second;
    if (best->second >= threshold) {
      g.status = SupportStatus::Supported;
      const auto& span = index.sentences()[best->first];
      g.evidence = SpanRef{span.begin, span.end};
    }
  }
  return g;
}

GroundingStatus ground_statement(const Statement& s, const std::string& transcript_text,
                                 const EmbedFn& embed, double threshold) {
  return ground_statement(s, GroundingIndex(transcript_text, embed), threshold);
}

bool within_frequency_tolerance(std::int64_t claimed, std::int64_t gold_count) {
  if (gold_count == 0) return claimed == 0;
  return 10 * std::llabs(claimed - gold_count) <= std::llabs(gold_count);
}

GroundingStatus classify_frequency_claim(const Statement& claim, const GoldStandard& gold,
                                         const IdMapping& mapping) {
  if (claim.kind != StatementKind::FrequencyClaim || !claim.claim)
    throw Error(Errc::InvalidArgument, "classify_frequency_claim expects a frequency claim: " +
                                           claim.id);
  GroundingStatus g;
  g.method = GroundingMethod::FrequencyRule;
  g.status = SupportStatus::Unsupported;
  const auto& c = *claim.claim;
  const auto gold_theme = mapping.gold_theme(c.theme_id);
  if (!gold_theme) return g;
  const ThemeCount* tc = gold.counts.find(*gold_theme);
  if (!tc) return g;
  std::int64_t gold_count = tc->count;
  if (c.subtheme_id) {
    const auto gold_sub = mapping.gold_subtheme(c.theme_id, *c.subtheme_id);
    if (!gold_sub) return g;
    const SubthemeCount* sc = tc->find_subtheme(*gold_sub);
    if (!sc) return g;
    gold_count = sc->count;
  }
  if (within_frequency_tolerance(c.claimed_count, gold_count)) g.status = SupportStatus::Supported;
  return g;
}

// ---------------------------------------------------------------------------

namespace {

bool semantic_match_any(const std::string& text, const std::vector<EmbeddingVector>& targets,
                        const EmbedFn& embed, double threshold) {
  if (targets.empty() || collapse_whitespace(text).empty()) return false;
  const auto v = embed(text);
  for (const auto& t : targets)
    if (cosine(v, t) >= threshold) return true;
  return false;
}

std::vector<EmbeddingVector> embed_all(const std::vector<std::string>& texts, const EmbedFn& embed) {
  std::vector<EmbeddingVector> out;
  for (const auto& t : texts)
    if (!collapse_whitespace(t).empty()) out.push_back(embed(t));
  return out;
}

}  // namespace

KeywordOmissions keyword_omissions(const std::vector<std::string>& gold_keywords,
                                   const std::vector<std::string>& model_keywords,
                                   const EmbedFn& embed, double threshold,
                                   const NormalizationConfig& cfg) {
  KeywordOmissions out;
  std::set<std::string> model_norm;
  for (const auto& k : model_keywords) {
    auto n = normalize_keyword(k, cfg);
    if (!n.empty()) model_norm.insert(std::move(n));
  }
  std::optional<std::vector<EmbeddingVector>> model_vecs;
  for (const auto& g : gold_keywords) {
    const auto n = normalize_keyword(g, cfg);
    bool found = !n.empty() && model_norm.contains(n);
    if (!found) {
      if (!model_vecs) model_vecs = embed_all(model_keywords, embed);
      found = semantic_match_any(g, *model_vecs, embed, threshold);
    }
    (found ? out.found : out.missed).push_back(g);
  }
  return out;
}

std::vector<std::string> keyword_inventions(const std::vector<std::string>& model_keywords,
                                            const GroundingIndex& transcript,
                                            const std::vector<std::string>& gold_keywords,
                                            double threshold) {
  std::vector<std::string> invented;
  std::optional<std::vector<EmbeddingVector>> gold_vecs;
  for (const auto& k : model_keywords) {
    if (normalized_contains(transcript.normalized(), normalize_keyword(k, transcript.config())))
      continue;
    if (auto best = transcript.best_sentence(k); best && best->second >= threshold) continue;
    if (!gold_vecs) {
      gold_vecs.emplace();
      for (const auto& g : gold_keywords)
        if (!collapse_whitespace(g).empty()) gold_vecs->push_back(transcript.embed(g));
    }
    if (semantic_match_any(k, *gold_vecs, [&](const std::string& t) { return transcript.embed(t); },
                           threshold))
      continue;
    invented.push_back(k);
  }
  return invented;
}

std::vector<std::string> model_keywords(const ThemeSet& themes) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& text) {
    auto c = collapse_whitespace(text);
    if (!c.empty() && seen.insert(c).second) out.push_back(std::move(c));
  };
  for (const auto& t : themes.themes) {
    add(t.description);
    for (const auto& st : t.subthemes) add(st.description);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct LabelledQuote {
  std::string text;
  std::string label;
  std::string norm;
};

std::vector<LabelledQuote> first_labels(const std::vector<Theme>& themes,
                                        const NormalizationConfig& cfg) {
  std::vector<LabelledQuote> out;
  std::set<std::string> seen;
  for (const auto& t : themes)
    for (const auto& st : t.subthemes)
      for (const auto& q : st.quotes) {
        auto c = collapse_whitespace(q);
        if (c.empty() || !seen.insert(c).second) continue;
        out.push_back({c, t.theme_id, normalize_keyword(c, cfg)});
      }
  return out;
}

}  // namespace

QuoteAlignment align_quotes(const ThemeSet& model, const GoldStandard& gold, const EmbedFn& embed,
                            double threshold, const NormalizationConfig& cfg) {
  const auto mq = first_labels(model.themes, cfg);
  std::vector<LabelledQuote> gq;
  if (gold.cluster_labels.empty()) {
    gq = first_labels(gold.themes, cfg);
  } else {
    for (const auto& [quote, label] : gold.cluster_labels) {
      auto c = collapse_whitespace(quote);
      if (!c.empty()) gq.push_back({c, label, normalize_keyword(c, cfg)});
    }
  }

  QuoteAlignment out;
  out.model_quotes = mq.size();
  out.gold_quotes = gq.size();
  std::vector<bool> mu(mq.size(), false), gu(gq.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> matched;  // (gold, model)

  for (std::size_t j = 0; j < gq.size(); ++j) {
    for (std::size_t i = 0; i < mq.size(); ++i) {
      if (mu[i]) continue;
      const bool hit = mq[i].text == gq[j].text ||
                       normalized_contains(mq[i].norm, gq[j].norm) ||
                       normalized_contains(gq[j].norm, mq[i].norm);
      if (!hit) continue;
      mu[i] = gu[j] = true;
      matched.emplace_back(j, i);
      break;
    }
  }

  struct Candidate {
    double sim;
    std::size_t j, i;
  };
  std::vector<Candidate> candidates;
  std::vector<std::optional<EmbeddingVector>> mv(mq.size());
  for (std::size_t j = 0; j < gq.size(); ++j) {
    if (gu[j]) continue;
    const auto gv = embed(gq[j].text);
    for (std::size_t i = 0; i < mq.size(); ++i) {
      if (mu[i]) continue;
      if (!mv[i]) mv[i] = embed(mq[i].text);
      candidates.push_back({cosine(gv, *mv[i]), j, i});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return std::tie(a.j, a.i) < std::tie(b.j, b.i);
  });
  for (const auto& c : candidates) {
    if (c.sim < threshold) break;
    if (gu[c.j] || mu[c.i]) continue;
    gu[c.j] = mu[c.i] = true;
    matched.emplace_back(c.j, c.i);
  }

  std::sort(matched.begin(), matched.end());
  for (const auto& [j, i] : matched) {
    out.labeling.items.push_back(gq[j].text);
    out.labeling.labels_a.push_back(mq[i].label);
    out.labeling.labels_b.push_back(gq[j].label);
  }
  out.excluded_model = mq.size() - matched.size();
  out.excluded_gold = gq.size() - matched.size();
  return out;
}

}  // namespace mpv
