#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lyricsense/corpus.hpp"
#include "lyricsense/embedding_cache.hpp"

namespace lyricsense {

// Corpus with planted per-aspect signals: every non-Low aspect gets one
// sentence carrying its Medium or High marker token; all other sentences
// are neutral filler.
struct SyntheticCorpusConfig {
  std::size_t n_items = 300;
  std::uint64_t seed = 0;
  std::size_t min_sentences = 4;
  std::size_t max_sentences = 8;
  double single_fraction = 0.4;
  // Level probabilities for Low, Medium, High.
  std::array<double, 3> level_weights = {0.5, 0.3, 0.2};
  // Positive raw score = 5 - Violence raw score.
  bool anti_monotone_positive = false;
};

// (Medium token, High token) per aspect.
std::array<std::array<std::string, 2>, kNumAspects> marker_tokens();

// Medium markers add medium_offset to their aspect block, High markers
// high_offset.
std::vector<SyntheticMarker> default_markers(double medium_offset = 3.0,
                                             double high_offset = 6.0);

Corpus synthetic_corpus(const SyntheticCorpusConfig& config);

// Flat sentence index (songs concatenated) of the first sentence holding a
// marker token for `aspect`, if any.
std::optional<std::size_t> marker_sentence(const MusicItem& item, Aspect aspect);

// Low-everything item built from filler only.
MusicItem synthetic_low_item(const std::string& item_id, std::size_t n_sentences,
                             std::uint64_t seed);

}  // namespace lyricsense
