#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mpv {

std::string sha256_hex(std::string_view data);

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string to_lower_ascii(std::string_view s);

/// Splits on '.', '?' and '!' into trimmed, non-empty spans with byte offsets.
struct TextSpan {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};
std::vector<TextSpan> split_sentences(std::string_view text);

/// Deterministic Fisher-Yates shuffle of [0, n) seeded from `seed`.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::string_view seed);

}  // namespace mpv
