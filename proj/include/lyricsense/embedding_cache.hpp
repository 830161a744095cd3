#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lyricsense/aspect.hpp"
#include "lyricsense/corpus.hpp"

namespace lyricsense {

inline constexpr std::uint32_t kCacheVersion = 1;

struct SentenceKey {
  std::string item_id;
  std::uint32_t song_index = 0;
  std::uint32_t sentence_index = 0;

  auto operator<=>(const SentenceKey&) const = default;
  bool operator==(const SentenceKey&) const = default;
};

std::string to_string(const SentenceKey& key);

// One sentence vector split into its two halves.
struct TwinEmbedding {
  std::vector<float> semantic;
  std::vector<float> emotion;

  std::vector<float> combined() const;
};

// In-memory table of twin sentence embeddings. Immutable after construction
// by open_cache or synthetic_provider; const access is thread-safe.
class EmbeddingCache {
 public:
  EmbeddingCache(std::uint32_t d_sem, std::uint32_t d_emo,
                 std::string provider_tag);

  std::uint32_t d_sem() const noexcept { return d_sem_; }
  std::uint32_t d_emo() const noexcept { return d_emo_; }
  std::uint32_t dim() const noexcept { return d_sem_ + d_emo_; }
  const std::string& provider_tag() const noexcept { return provider_tag_; }
  std::size_t size() const noexcept { return index_.size(); }

  // Throws InputError on a duplicate key, ShapeError on a wrong length or
  // non-finite entry.
  void insert(const SentenceKey& key, std::span<const float> combined);
  void insert(const SentenceKey& key, const TwinEmbedding& twin);

  bool contains(const SentenceKey& key) const;
  std::span<const float> combined(const SentenceKey& key) const;
  TwinEmbedding twin(const SentenceKey& key) const;

  // Keys in record order (sorted).
  std::vector<SentenceKey> keys() const;

  // Throws InputError listing missing keys (and any keys not in the corpus).
  void validate_coverage(std::span<const MusicItem> items) const;

  // dim() x sentence_count matrix, songs concatenated in order. With
  // normalize_halves each half is scaled to unit L2 norm first; with
  // use_emotion=false the emotion rows are dropped.
  Eigen::MatrixXd item_matrix(const MusicItem& item,
                              bool normalize_halves = false,
                              bool use_emotion = true) const;

  // Serialized bytes (the exact file content write_cache produces).
  std::vector<std::uint8_t> serialize() const;

  // Digest over the full serialized content.
  std::string content_digest() const;
  // Digest over version, dims and provider tag only: two caches from the
  // same provider configuration share it.
  std::string signature_digest() const;

 private:
  std::size_t slot(const SentenceKey& key) const;

  std::uint32_t d_sem_;
  std::uint32_t d_emo_;
  std::string provider_tag_;
  std::map<SentenceKey, std::size_t> index_;
  std::vector<float> data_;
};

void write_cache(const EmbeddingCache& cache, const std::filesystem::path& path);

// Parses and validates layout. Throws FormatError carrying the byte offset
// of the first problem.
EmbeddingCache open_cache(const std::filesystem::path& path);
EmbeddingCache parse_cache(std::span<const std::uint8_t> bytes);

// open_cache plus coverage against a corpus.
EmbeddingCache open_cache(const std::filesystem::path& path,
                          std::span<const MusicItem> items);

struct SyntheticMarker {
  std::string token;
  Aspect aspect = Aspect::Violence;
  double offset = 0.0;
};

struct SyntheticConfig {
  std::uint32_t d_sem = 32;
  std::uint32_t d_emo = 8;
  std::uint64_t seed = 0;
  std::vector<SyntheticMarker> markers;
  // Width of each aspect's reserved coordinate block; aspect a owns
  // [a * block_width, (a + 1) * block_width) of the semantic half.
  std::uint32_t block_width = 2;
};

// Each coordinate is a seeded hash of (seed, sentence text, coordinate)
// mapped into [-1, 1]. A sentence containing a marker token gets the
// marker's offset added to its aspect's block (once per marker).
std::vector<float> synthetic_vector(const std::string& sentence,
                                    const SyntheticConfig& config);

EmbeddingCache synthetic_provider(std::span<const MusicItem> items,
                                  const SyntheticConfig& config);

}  // namespace lyricsense
