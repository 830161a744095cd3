#include "lyricsense/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "lyricsense/error.hpp"
#include "lyricsense/random.hpp"
#include "lyricsense/text.hpp"

namespace lyricsense {
namespace {

constexpr std::array<std::string_view, 24> kFiller = {
    "morning", "river",  "window", "street", "letter", "summer",
    "lantern", "garden", "train",  "coffee", "yellow", "harbor",
    "mountain", "radio", "kitchen", "winter", "ocean",  "pencil",
    "evening", "bicycle", "cloud", "forest", "station", "candle"};

constexpr std::array<std::string_view, 8> kVerbs = {
    "walking", "watching", "waiting", "singing",
    "drawing", "reading",  "driving", "calling"};

std::string filler_sentence(Rng& rng) {
  std::string s = std::string(kVerbs[rng.below(kVerbs.size())]);
  const std::size_t n = 2 + rng.below(3);
  for (std::size_t i = 0; i < n; ++i) {
    s += ' ';
    s += kFiller[rng.below(kFiller.size())];
  }
  return s;
}

SeverityLevel draw_level(Rng& rng, const std::array<double, 3>& w) {
  const double total = w[0] + w[1] + w[2];
  const double u = rng.uniform() * total;
  if (u < w[0]) return SeverityLevel::Low;
  if (u < w[0] + w[1]) return SeverityLevel::Medium;
  return SeverityLevel::High;
}

int raw_for(SeverityLevel level, Rng& rng) {
  return 2 * code(level) + static_cast<int>(rng.below(2));
}

std::vector<Song> split_into_songs(const std::string& item_id,
                                   std::vector<std::string> sentences,
                                   std::size_t n_songs) {
  std::vector<Song> songs(n_songs);
  const std::size_t per = (sentences.size() + n_songs - 1) / n_songs;
  for (std::size_t s = 0; s < n_songs; ++s) {
    songs[s].song_id = item_id + "/song_" + std::to_string(s + 1) + ".txt";
    const std::size_t lo = std::min(sentences.size(), s * per);
    const std::size_t hi = std::min(sentences.size(), lo + per);
    songs[s].sentences.assign(sentences.begin() + static_cast<std::ptrdiff_t>(lo),
                              sentences.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  std::erase_if(songs, [](const Song& s) { return s.sentences.empty(); });
  return songs;
}

}  // namespace

std::array<std::array<std::string, 2>, kNumAspects> marker_tokens() {
  return {{{"gunfight", "massacre"},
           {"drunk", "overdose"},
           {"sexy", "naked"},
           {"shopping", "diamonds"},
           {"hope", "together"}}};
}

std::vector<SyntheticMarker> default_markers(double medium_offset,
                                             double high_offset) {
  std::vector<SyntheticMarker> out;
  const auto tokens = marker_tokens();
  for (Aspect a : kAllAspects) {
    out.push_back({tokens[index(a)][0], a, medium_offset});
    out.push_back({tokens[index(a)][1], a, high_offset});
  }
  return out;
}

Corpus synthetic_corpus(const SyntheticCorpusConfig& config) {
  if (config.min_sentences < 2 || config.max_sentences < config.min_sentences)
    throw InputError("synthetic corpus needs 2 <= min_sentences <= max_sentences");
  const auto tokens = marker_tokens();
  Rng rng(config.seed);
  Corpus corpus;
  corpus.reserve(config.n_items);
  for (std::size_t i = 0; i < config.n_items; ++i) {
    MusicItem item;
    char id[32];
    std::snprintf(id, sizeof id, "syn%04zu", i);
    item.item_id = id;
    item.title = "Synthetic " + std::to_string(i);
    item.kind = rng.uniform() < config.single_fraction ? ItemKind::Single
                                                        : ItemKind::Album;

    std::array<int, kNumAspects> raw{};
    for (Aspect a : kAllAspects)
      raw[index(a)] = raw_for(draw_level(rng, config.level_weights), rng);
    if (config.anti_monotone_positive)
      raw[index(Aspect::Positive)] = 5 - raw[index(Aspect::Violence)];
    item.ratings = AspectRatings::from_raw(raw, item.item_id);

    const std::size_t n = config.min_sentences +
                          rng.below(config.max_sentences - config.min_sentences + 1);
    std::vector<std::string> sentences;
    for (std::size_t k = 0; k < n; ++k) sentences.push_back(filler_sentence(rng));
    // Each marker replaces a distinct filler line; extra markers append.
    std::vector<std::size_t> slots(n);
    for (std::size_t k = 0; k < n; ++k) slots[k] = k;
    rng.shuffle(std::span(slots));
    std::size_t used = 0;
    for (Aspect a : kAllAspects) {
      const SeverityLevel lv = item.ratings.level(a);
      if (lv == SeverityLevel::Low) continue;
      const std::string line = filler_sentence(rng) + " " +
                               tokens[index(a)][code(lv) - 1] + " " +
                               std::string(kFiller[rng.below(kFiller.size())]);
      if (used < slots.size()) {
        sentences[slots[used++]] = line;
      } else {
        sentences.push_back(line);
      }
    }

    const std::size_t n_songs =
        item.kind == ItemKind::Single ? 1 : 2 + rng.below(2);
    item.songs = split_into_songs(item.item_id, std::move(sentences),
                                  std::min(n_songs, n));
    corpus.push_back(std::move(item));
  }
  return corpus;
}

std::optional<std::size_t> marker_sentence(const MusicItem& item, Aspect aspect) {
  const auto& pair = marker_tokens()[index(aspect)];
  std::size_t flat = 0;
  for (const auto& song : item.songs) {
    for (const auto& s : song.sentences) {
      const auto toks = tokenize(s);
      if (std::find(toks.begin(), toks.end(), pair[0]) != toks.end() ||
          std::find(toks.begin(), toks.end(), pair[1]) != toks.end())
        return flat;
      ++flat;
    }
  }
  return std::nullopt;
}

MusicItem synthetic_low_item(const std::string& item_id, std::size_t n_sentences,
                             std::uint64_t seed) {
  Rng rng(seed);
  MusicItem item;
  item.item_id = item_id;
  item.title = item_id;
  item.kind = ItemKind::Single;
  item.ratings = AspectRatings::from_raw({0, 0, 0, 0, 0}, item_id);
  std::vector<std::string> sentences;
  for (std::size_t k = 0; k < n_sentences; ++k) sentences.push_back(filler_sentence(rng));
  item.songs = split_into_songs(item_id, std::move(sentences), 1);
  return item;
}

}  // namespace lyricsense
