#include "mpv/segmentation.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include "mpv/error.hpp"

namespace mpv {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct WordSpan {
  std::size_t begin;
  std::size_t end;
};

std::vector<WordSpan> words_of(std::string_view text) {
  std::vector<WordSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    const std::size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    out.push_back({b, i});
  }
  return out;
}

/// Byte offset of every UTF-8 code point start, plus text.size() at the end.
std::vector<std::size_t> code_point_offsets(std::string_view text) {
  std::vector<std::size_t> out;
  out.reserve(text.size() + 1);
  for (std::size_t i = 0; i < text.size(); ++i)
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) out.push_back(i);
  out.push_back(text.size());
  return out;
}

/// Token boundaries as byte offsets: boundary[t] is where token t starts and
/// boundary[N] == text.size().
std::vector<std::size_t> token_boundaries(std::string_view text, const TokenizerConfig& cfg) {
  std::vector<std::size_t> out;
  if (cfg.mode == TokenizerConfig::Mode::Whitespace) {
    const auto words = words_of(text);
    out.reserve(words.size() + 1);
    for (std::size_t i = 0; i < words.size(); ++i) out.push_back(i == 0 ? 0 : words[i].begin);
    out.push_back(text.size());
    return out;
  }
  const auto cps = code_point_offsets(text);
  const std::size_t n_cp = cps.size() - 1;
  const std::size_t n_tok = count_tokens(text, cfg);
  out.reserve(n_tok + 1);
  for (std::size_t t = 0; t < n_tok; ++t) {
    const auto cp = static_cast<std::size_t>(std::floor(static_cast<double>(t) * cfg.chars_per_token));
    out.push_back(cps[std::min(cp, n_cp)]);
  }
  out.push_back(text.size());
  return out;
}

/// Moves a mid-word offset back to the start of that word.
std::size_t snap_back(std::string_view text, std::size_t pos) {
  if (pos == 0 || pos >= text.size()) return pos;
  if (is_space(text[pos]) || is_space(text[pos - 1])) return pos;
  while (pos > 0 && !is_space(text[pos - 1])) --pos;
  return pos;
}

void validate_window(std::size_t window, std::size_t overlap) {
  if (window == 0 || overlap >= window)
    throw Error(Errc::InvalidWindow, "require 0 <= overlap < window (window=" +
                                         std::to_string(window) +
                                         ", overlap=" + std::to_string(overlap) + ")");
}

struct TokenRange {
  std::size_t start;
  std::size_t end;
};

std::vector<TokenRange> window_ranges(std::size_t n_tokens, std::size_t window,
                                      std::size_t overlap) {
  std::vector<TokenRange> out;
  const std::size_t stride = window - overlap;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + window, n_tokens);
    out.push_back({start, end});
    if (end == n_tokens) break;
  }
  return out;
}

Segment make_segment(const Transcript& t, std::size_t index, TokenRange r,
                     const std::vector<std::size_t>& bounds) {
  Segment s;
  s.transcript_id = t.id;
  s.index = index;
  s.token_start = r.start;
  s.token_end = r.end;
  s.byte_begin = snap_back(t.text, bounds[r.start]);
  s.byte_end = snap_back(t.text, bounds[r.end]);
  if (s.byte_end <= s.byte_begin) {
    // A single word longer than the window; keep the raw boundary.
    s.byte_begin = bounds[r.start];
    s.byte_end = bounds[r.end];
  }
  s.text = t.text.substr(s.byte_begin, s.byte_end - s.byte_begin);
  return s;
}

}  // namespace

std::size_t count_tokens(std::string_view text, const TokenizerConfig& cfg) {
  if (cfg.mode == TokenizerConfig::Mode::Whitespace) return words_of(text).size();
  if (!(cfg.chars_per_token > 0.0))
    throw Error(Errc::InvalidArgument, "chars_per_token must be positive");
  std::size_t n_cp = 0;
  for (char c : text)
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n_cp;
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n_cp) / cfg.chars_per_token));
}

std::vector<Segment> segment(const Transcript& t, std::size_t window, std::size_t overlap,
                             const TokenizerConfig& cfg) {
  validate_window(window, overlap);
  const auto bounds = token_boundaries(t.text, cfg);
  const std::size_t n = bounds.size() - 1;
  if (n == 0 || collapse_whitespace(t.text).empty())
    throw Error(Errc::EmptyTranscript, "transcript \"" + t.id + "\" has no tokens");
  std::vector<Segment> out;
  const auto ranges = window_ranges(n, window, overlap);
  for (std::size_t i = 0; i < ranges.size(); ++i) out.push_back(make_segment(t, i, ranges[i], bounds));
  return out;
}

std::vector<Segment> stride_partition(const Transcript& t, std::size_t window, std::size_t overlap,
                                      const TokenizerConfig& cfg) {
  validate_window(window, overlap);
  const auto bounds = token_boundaries(t.text, cfg);
  const std::size_t n = bounds.size() - 1;
  if (n == 0 || collapse_whitespace(t.text).empty())
    throw Error(Errc::EmptyTranscript, "transcript \"" + t.id + "\" has no tokens");
  auto ranges = window_ranges(n, window, overlap);
  for (std::size_t i = 1; i < ranges.size(); ++i) ranges[i].start += overlap;
  std::vector<Segment> out;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    Segment s;
    s.transcript_id = t.id;
    s.index = i;
    s.token_start = ranges[i].start;
    s.token_end = ranges[i].end;
    s.byte_begin = snap_back(t.text, bounds[ranges[i].start]);
    s.byte_end = snap_back(t.text, bounds[ranges[i].end]);
    if (s.byte_end < s.byte_begin) s.byte_end = s.byte_begin;
    s.text = t.text.substr(s.byte_begin, s.byte_end - s.byte_begin);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Member {
  std::size_t segment;
  EmbeddingVector vec;
};

struct SubGroup {
  Subtheme sub;
  std::vector<Member> members;
};

struct Group {
  Theme theme;  // subthemes are kept in `subs` until the end
  std::vector<Member> members;
  std::vector<SubGroup> subs;
};

/// Index of the candidate whose best earlier-segment member is most similar,
/// or -1 when no member reaches the threshold. Ties keep the earliest.
template <typename T>
int best_match(const std::vector<T>& candidates, const EmbeddingVector& v, std::size_t segment,
               double threshold) {
  int best = -1;
  double best_sim = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (const auto& m : candidates[i].members) {
      if (m.segment >= segment) continue;
      const double sim = cosine(m.vec, v);
      if (sim >= threshold && (best < 0 || sim > best_sim)) {
        best = static_cast<int>(i);
        best_sim = sim;
      }
    }
  }
  return best;
}

std::string unique_id(const std::string& id, std::size_t segment, std::set<std::string>& taken) {
  if (taken.insert(id).second) return id;
  std::string candidate = id + "-s" + std::to_string(segment);
  for (int n = 2; !taken.insert(candidate).second; ++n)
    candidate = id + "-s" + std::to_string(segment) + "-" + std::to_string(n);
  return candidate;
}

void union_quotes(std::vector<std::string>& into, const std::vector<std::string>& from) {
  std::set<std::string> seen;
  for (const auto& q : into) seen.insert(collapse_whitespace(q));
  for (const auto& q : from)
    if (seen.insert(collapse_whitespace(q)).second) into.push_back(q);
}

}  // namespace

ThemeSet merge_theme_sets(const std::vector<ThemeSet>& per_segment, const EmbedFn& embed,
                          double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(Errc::InvalidArgument, "merge threshold must be in (0, 1]");
  std::vector<Group> groups;
  std::set<std::string> theme_ids;

  for (std::size_t k = 0; k < per_segment.size(); ++k) {
    for (const auto& theme : per_segment[k].themes) {
      auto vec = embed(theme.description);
      const int g = best_match(groups, vec, k, threshold);
      if (g < 0) {
        Group group;
        group.theme = theme;
        group.theme.theme_id = unique_id(theme.theme_id, k, theme_ids);
        group.theme.subthemes.clear();
        group.members.push_back({k, std::move(vec)});
        std::set<std::string> sub_ids;
        for (const auto& st : theme.subthemes) {
          SubGroup sg{st, {{k, embed(st.description)}}};
          sg.sub.subtheme_id = unique_id(st.subtheme_id, k, sub_ids);
          group.subs.push_back(std::move(sg));
        }
        groups.push_back(std::move(group));
        continue;
      }
      auto& group = groups[static_cast<std::size_t>(g)];
      group.members.push_back({k, std::move(vec)});
      std::set<std::string> sub_ids;
      for (const auto& sg : group.subs) sub_ids.insert(sg.sub.subtheme_id);
      for (const auto& st : theme.subthemes) {
        auto svec = embed(st.description);
        const int s = best_match(group.subs, svec, k, threshold);
        if (s < 0) {
          SubGroup sg{st, {{k, std::move(svec)}}};
          sg.sub.subtheme_id = unique_id(st.subtheme_id, k, sub_ids);
          group.subs.push_back(std::move(sg));
        } else {
          auto& target = group.subs[static_cast<std::size_t>(s)];
          union_quotes(target.sub.quotes, st.quotes);
          target.members.push_back({k, std::move(svec)});
        }
      }
    }
  }

  ThemeSet out;
  for (auto& g : groups) {
    for (auto& sg : g.subs) g.theme.subthemes.push_back(std::move(sg.sub));
    out.themes.push_back(std::move(g.theme));
  }
  return out;
}

}  // namespace mpv
