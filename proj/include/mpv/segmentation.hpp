#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mpv/domain.hpp"
#include "mpv/embedding.hpp"

namespace mpv {

struct TokenizerConfig {
  enum class Mode { Whitespace, CharsPerToken };
  Mode mode = Mode::CharsPerToken;
  double chars_per_token = 4.0;

  static TokenizerConfig whitespace() { return {Mode::Whitespace, 4.0}; }
  static TokenizerConfig chars(double k) { return {Mode::CharsPerToken, k}; }
};

struct Segment {
  std::string transcript_id;
  std::size_t index = 0;
  // Token offsets before word snapping.
  std::size_t token_start = 0;
  std::size_t token_end = 0;
  // Byte range of `text` inside the transcript after snapping.
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
  std::string text;
};

/// Whitespace: number of whitespace-delimited words. CharsPerToken:
/// ceil(code_points / k).
std::size_t count_tokens(std::string_view text, const TokenizerConfig& cfg);

/// Sliding windows at token offsets 0, stride, 2*stride, ... with
/// stride = window - overlap; the last window may be shorter. Text boundaries
/// snap back to whitespace so no word is split.
/// Errors: InvalidWindow (overlap >= window or window == 0), EmptyTranscript.
std::vector<Segment> segment(const Transcript& t, std::size_t window = 4096,
                             std::size_t overlap = 512, const TokenizerConfig& cfg = {});

/// Non-overlapping pieces of the same windowing: piece k drops the first
/// `overlap` tokens of window k (k > 0), so every token belongs to exactly
/// one piece and overlaps are attributed to the earlier window.
std::vector<Segment> stride_partition(const Transcript& t, std::size_t window = 4096,
                                      std::size_t overlap = 512, const TokenizerConfig& cfg = {});

/// Union-merge of per-segment theme sets in segment order. A theme from
/// segment k joins the existing group holding the most similar member from an
/// earlier segment when that cosine >= threshold; the group keeps the earliest
/// id and description. Subthemes merge the same way inside a group and quotes
/// are unioned without duplicates. Colliding ids of carried-through items get a
/// "-s<k>" suffix.
ThemeSet merge_theme_sets(const std::vector<ThemeSet>& per_segment, const EmbedFn& embed,
                          double threshold = 0.80);

}  // namespace mpv
