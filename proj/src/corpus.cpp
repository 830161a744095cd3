#include "lyricsense/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lyricsense/error.hpp"
#include "lyricsense/log.hpp"
#include "lyricsense/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lyricsense {

std::string_view kind_key(ItemKind kind) noexcept {
  return kind == ItemKind::Album ? "album" : "single";
}

SeverityLevel project_rating(int raw_score, std::string_view item_id,
                             std::string_view aspect) {
  if (raw_score < 0 || raw_score > 5) {
    std::ostringstream msg;
    msg << "score out of range: " << raw_score << " (expected 0..5)";
    if (!item_id.empty()) msg << " for item '" << item_id << "'";
    if (!aspect.empty()) msg << " aspect '" << aspect << "'";
    throw InputError(msg.str());
  }
  if (raw_score <= 1) return SeverityLevel::Low;
  if (raw_score <= 3) return SeverityLevel::Medium;
  return SeverityLevel::High;
}

AspectRatings AspectRatings::from_raw(const std::array<int, kNumAspects>& raw,
                                      std::string_view item_id) {
  AspectRatings r;
  r.raw = raw;
  for (Aspect a : kAllAspects) {
    r.projected[index(a)] =
        project_rating(raw[index(a)], item_id, aspect_key(a));
  }
  return r;
}

std::size_t MusicItem::sentence_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : songs) n += s.sentences.size();
  return n;
}

std::string normalize_sentence(std::string_view line) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = line.size();
  while (b < e && is_space(static_cast<unsigned char>(line[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(line[e - 1]))) --e;
  line = line.substr(b, e - b);
  // Non-ASCII bytes count as letters so UTF-8 lyrics are kept.
  const bool has_content = std::any_of(line.begin(), line.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return c >= 0x80 || std::isalnum(c) != 0;
  });
  return has_content ? std::string(line) : std::string();
}

std::vector<std::string> read_sentences(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open lyrics file: " + file.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto s = normalize_sentence(line);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

ManifestRecord parse_manifest_record(const json& record,
                                     std::size_t record_index) {
  auto fail = [&](const std::string& what) -> InputError {
    return InputError("manifest record " + std::to_string(record_index) +
                      ": " + what);
  };
  if (!record.is_object()) throw fail("not a JSON object");

  ManifestRecord r;
  auto string_field = [&](const char* key) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string())
      throw fail(std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
  };
  r.item_id = string_field("item_id");
  if (r.item_id.empty()) throw fail("empty item_id");
  r.title = string_field("title");

  const auto kind = string_field("kind");
  if (kind == "album") {
    r.kind = ItemKind::Album;
  } else if (kind == "single") {
    r.kind = ItemKind::Single;
  } else {
    throw fail("kind must be \"album\" or \"single\", got \"" + kind + "\"");
  }

  auto ratings = record.find("ratings");
  if (ratings == record.end() || !ratings->is_object())
    throw fail("missing 'ratings' object");
  for (Aspect a : kAllAspects) {
    auto it = ratings->find(std::string(aspect_key(a)));
    if (it == ratings->end())
      throw fail("missing rating for aspect '" + std::string(aspect_key(a)) +
                 "'");
    if (!it->is_number_integer())
      throw fail("rating for aspect '" + std::string(aspect_key(a)) +
                 "' is not an integer");
    const int v = it->get<int>();
    try {
      project_rating(v, r.item_id, aspect_key(a));
    } catch (const InputError& e) {
      throw fail(e.what());
    }
    r.ratings[index(a)] = v;
  }
  for (const auto& [key, _] : ratings->items()) {
    if (!parse_aspect(key)) throw fail("unknown rating aspect '" + key + "'");
  }

  auto lyrics = record.find("lyrics");
  if (lyrics == record.end() || !lyrics->is_array() || lyrics->empty())
    throw fail("missing or empty 'lyrics' array");
  for (const auto& p : *lyrics) {
    if (!p.is_string() || p.get<std::string>().empty())
      throw fail("lyrics entries must be non-empty strings");
    r.lyrics.push_back(p.get<std::string>());
  }
  return r;
}

Corpus load_manifest(const fs::path& manifest_path, const fs::path& lyrics_root) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest: " + manifest_path.string());

  Corpus items;
  std::set<std::string> seen;
  std::string line;
  std::size_t record_index = 0;
  while (std::getline(in, line)) {
    if (normalize_sentence(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError("manifest record " + std::to_string(record_index) +
                       ": malformed JSON: " + e.what());
    }
    ManifestRecord r = parse_manifest_record(record, record_index);
    if (!seen.insert(r.item_id).second)
      throw InputError("manifest record " + std::to_string(record_index) +
                       ": duplicate item_id '" + r.item_id + "'");

    MusicItem item;
    item.item_id = r.item_id;
    item.title = r.title;
    item.kind = r.kind;
    item.ratings = AspectRatings::from_raw(r.ratings, r.item_id);

    std::vector<std::string> missing;
    for (const auto& rel : r.lyrics) {
      const fs::path file = lyrics_root / rel;
      if (!fs::is_regular_file(file)) {
        missing.push_back(file.string());
        warn("item '" + r.item_id + "': lyrics file missing, song skipped: " +
             file.string());
        continue;
      }
      Song song{rel, read_sentences(file)};
      if (song.sentences.empty()) {
        warn("item '" + r.item_id + "': lyrics file has no sentences, song "
             "skipped: " + file.string());
        continue;
      }
      item.songs.push_back(std::move(song));
    }
    if (item.songs.empty()) {
      std::string msg = "manifest record " + std::to_string(record_index) +
                        ": item '" + r.item_id + "' has no resolvable songs";
      if (!missing.empty()) {
        msg += "; missing lyrics file(s):";
        for (const auto& m : missing) msg += " " + m;
      }
      throw InputError(msg);
    }
    items.push_back(std::move(item));
    ++record_index;
  }
  return items;
}

void write_manifest(std::span<const MusicItem> items,
                    const fs::path& manifest_path, const fs::path& lyrics_root) {
  if (manifest_path.has_parent_path())
    fs::create_directories(manifest_path.parent_path());
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write manifest: " + manifest_path.string());

  for (const auto& item : items) {
    json ratings = json::object();
    for (Aspect a : kAllAspects)
      ratings[std::string(aspect_key(a))] = item.ratings.raw_score(a);
    json lyrics = json::array();
    for (const auto& song : item.songs) {
      const fs::path file = lyrics_root / song.song_id;
      fs::create_directories(file.parent_path());
      std::ofstream lf(file, std::ios::binary | std::ios::trunc);
      if (!lf) throw InputError("cannot write lyrics file: " + file.string());
      for (const auto& s : song.sentences) lf << s << '\n';
      lyrics.push_back(song.song_id);
    }
    json record = {{"item_id", item.item_id},
                   {"title", item.title},
                   {"kind", std::string(kind_key(item.kind))},
                   {"ratings", ratings},
                   {"lyrics", lyrics}};
    out << record.dump() << '\n';
  }
}

std::map<SeverityLevel, std::size_t> label_distribution(
    std::span<const MusicItem> items, Aspect aspect) {
  std::map<SeverityLevel, std::size_t> counts = {{SeverityLevel::Low, 0},
                                                 {SeverityLevel::Medium, 0},
                                                 {SeverityLevel::High, 0}};
  for (const auto& item : items) ++counts[item.ratings.level(aspect)];
  return counts;
}

std::map<std::string, double> kind_distribution(
    std::span<const MusicItem> items) {
  std::map<std::string, double> out = {{"album", 0.0}, {"single", 0.0}};
  if (items.empty()) return out;
  for (const auto& item : items) out[std::string(kind_key(item.kind))] += 1.0;
  for (auto& [_, v] : out) v /= static_cast<double>(items.size());
  return out;
}

int FoldPlan::fold_of(const std::string& item_id) const {
  auto it = assignments.find(item_id);
  if (it == assignments.end())
    throw InputError("item '" + item_id + "' is not in the fold plan");
  return it->second;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n_folds), 0);
  for (const auto& [_, f] : assignments) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

json FoldPlan::to_json() const {
  return {{"n_folds", n_folds},
          {"seed", seed},
          {"dev_fraction", dev_fraction},
          {"test_fraction", test_fraction},
          {"stratified_on", stratified_on},
          {"assignments", assignments}};
}

FoldPlan FoldPlan::from_json(const json& j) {
  FoldPlan p;
  p.n_folds = j.at("n_folds").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.dev_fraction = j.at("dev_fraction").get<double>();
  p.test_fraction = j.at("test_fraction").get<double>();
  p.stratified_on = j.at("stratified_on").get<std::string>();
  p.assignments = j.at("assignments").get<std::map<std::string, int>>();
  for (const auto& [id, f] : p.assignments) {
    if (f < 0 || f >= p.n_folds)
      throw InputError("fold plan: item '" + id + "' has fold index " +
                       std::to_string(f) + " outside [0, " +
                       std::to_string(p.n_folds) + ")");
  }
  return p;
}

FoldPlan make_folds(std::span<const MusicItem> items, int n_folds,
                    std::uint64_t seed) {
  if (n_folds < 2) throw InputError("n_folds must be at least 2");
  if (items.size() < static_cast<std::size_t>(n_folds))
    throw InputError("too few items for " + std::to_string(n_folds) +
                     " folds: " + std::to_string(items.size()));

  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.dev_fraction = 1.0 / static_cast<double>(n_folds - 1);
  plan.test_fraction = 1.0 / static_cast<double>(n_folds);
  plan.stratified_on = std::string(aspect_key(Aspect::Violence));

  Rng rng(seed);
  std::size_t next = 0;
  for (int lv = 0; lv < kNumLevels; ++lv) {
    std::vector<std::size_t> group;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (code(items[i].ratings.level(Aspect::Violence)) == lv)
        group.push_back(i);
    }
    rng.shuffle(std::span(group));
    for (std::size_t i : group) {
      const auto& id = items[i].item_id;
      if (!plan.assignments.emplace(id, static_cast<int>(next % n_folds)).second)
        throw InputError("duplicate item_id '" + id + "'");
      ++next;
    }
  }
  return plan;
}

FoldSplit split_fold(const FoldPlan& plan, std::span<const MusicItem> items,
                     int fold) {
  if (fold < 0 || fold >= plan.n_folds)
    throw InputError("fold index out of range: " + std::to_string(fold));
  FoldSplit split;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (plan.fold_of(items[i].item_id) == fold) {
      split.test.push_back(i);
    } else {
      pool.push_back(i);
    }
  }
  Rng rng(derive_seed(plan.seed, 1000 + static_cast<std::uint64_t>(fold)));
  rng.shuffle(std::span(pool));
  auto n_dev = static_cast<std::size_t>(
      std::llround(plan.dev_fraction * static_cast<double>(pool.size())));
  // Keep at least one training item.
  n_dev = std::min(n_dev, pool.empty() ? 0 : pool.size() - 1);
  split.dev.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_dev));
  split.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_dev), pool.end());
  std::sort(split.dev.begin(), split.dev.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

json corpus_to_json(std::span<const MusicItem> items) {
  json out = json::array();
  for (const auto& item : items) {
    json ratings = json::object();
    json levels = json::object();
    for (Aspect a : kAllAspects) {
      ratings[std::string(aspect_key(a))] = item.ratings.raw_score(a);
      levels[std::string(aspect_key(a))] =
          std::string(level_name(item.ratings.level(a)));
    }
    json songs = json::array();
    for (const auto& s : item.songs)
      songs.push_back({{"song_id", s.song_id}, {"sentences", s.sentences}});
    out.push_back({{"item_id", item.item_id},
                   {"title", item.title},
                   {"kind", std::string(kind_key(item.kind))},
                   {"ratings", ratings},
                   {"levels", levels},
                   {"songs", songs}});
  }
  return out;
}

}  // namespace lyricsense
