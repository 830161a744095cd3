#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lyricsense {

// Lowercase ASCII, split on anything that is not [a-z0-9]. Non-ASCII bytes
// are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text);

// 64-bit FNV-1a. Used where a hash must be stable across platforms.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lyricsense
