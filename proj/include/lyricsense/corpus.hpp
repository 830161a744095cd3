#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lyricsense/aspect.hpp"

namespace lyricsense {

enum class ItemKind { Album, Single };

std::string_view kind_key(ItemKind kind) noexcept;

struct Song {
  // Relative lyrics path as it appeared in the manifest.
  std::string song_id;
  std::vector<std::string> sentences;

  bool operator==(const Song&) const = default;
};

struct AspectRatings {
  std::array<int, kNumAspects> raw{};
  std::array<SeverityLevel, kNumAspects> projected{};

  int raw_score(Aspect a) const { return raw[index(a)]; }
  SeverityLevel level(Aspect a) const { return projected[index(a)]; }

  // Builds both maps; projected is derived from raw.
  static AspectRatings from_raw(const std::array<int, kNumAspects>& raw,
                                std::string_view item_id = {});

  bool operator==(const AspectRatings&) const = default;
};

struct MusicItem {
  std::string item_id;
  std::string title;
  ItemKind kind = ItemKind::Album;
  std::vector<Song> songs;
  AspectRatings ratings;

  std::size_t sentence_count() const noexcept;

  bool operator==(const MusicItem&) const = default;
};

using Corpus = std::vector<MusicItem>;

// Median-split projection of an expert 0..5 score. Throws InputError naming
// the item and aspect when the score is out of range.
SeverityLevel project_rating(int raw_score, std::string_view item_id = {},
                             std::string_view aspect = {});

// Trims a raw lyric line. Returns an empty string for lines that should be
// dropped (blank, or no alphanumeric content).
std::string normalize_sentence(std::string_view line);

std::vector<std::string> read_sentences(const std::filesystem::path& file);

// Reads a JSON-lines manifest. Songs whose lyrics file is missing are
// skipped with a warning; an item with no resolvable song is rejected with
// the missing paths in the message.
Corpus load_manifest(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& lyrics_root);

// Parses one manifest line. record_index is used only for messages.
struct ManifestRecord {
  std::string item_id;
  std::string title;
  ItemKind kind = ItemKind::Album;
  std::array<int, kNumAspects> ratings{};
  std::vector<std::string> lyrics;
};
ManifestRecord parse_manifest_record(const nlohmann::json& record,
                                     std::size_t record_index);

// Writes items back as manifest + one lyrics file per song (at song_id
// relative to lyrics_root). Inverse of load_manifest.
void write_manifest(std::span<const MusicItem> items,
                    const std::filesystem::path& manifest_path,
                    const std::filesystem::path& lyrics_root);

std::map<SeverityLevel, std::size_t> label_distribution(
    std::span<const MusicItem> items, Aspect aspect);

// Fraction of items per kind, keyed by kind_key.
std::map<std::string, double> kind_distribution(
    std::span<const MusicItem> items);

struct FoldPlan {
  int n_folds = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignments;
  // Share of the training pool carved out as dev within each fold.
  double dev_fraction = 0.0;
  // Share of the corpus held out per fold.
  double test_fraction = 0.0;
  std::string stratified_on;

  int fold_of(const std::string& item_id) const;
  std::vector<std::size_t> fold_sizes() const;

  nlohmann::json to_json() const;
  static FoldPlan from_json(const nlohmann::json& j);
};

// Stratified on the Violence level: items are shuffled within each level and
// dealt round-robin, so fold sizes differ by at most one.
FoldPlan make_folds(std::span<const MusicItem> items, int n_folds,
                    std::uint64_t seed);

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

// Held-out fold is the test split; dev is dev_fraction of the remaining pool,
// chosen by a seeded shuffle. Indices refer to `items`.
FoldSplit split_fold(const FoldPlan& plan, std::span<const MusicItem> items,
                     int fold);

nlohmann::json corpus_to_json(std::span<const MusicItem> items);

}  // namespace lyricsense
