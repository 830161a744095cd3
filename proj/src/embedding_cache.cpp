#include "lyricsense/embedding_cache.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "lyricsense/digest.hpp"
#include "lyricsense/error.hpp"
#include "lyricsense/random.hpp"
#include "lyricsense/text.hpp"

namespace fs = std::filesystem;

namespace lyricsense {
namespace {

constexpr char kMagic[4] = {'O', 'R', 'D', 'R'};

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw FormatError(std::string("truncated embedding cache: expected ") +
                            what,
                        pos_);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(const char* what) {
    const auto n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const SentenceKey& key) {
  return "(" + key.item_id + ", song " + std::to_string(key.song_index) +
         ", sentence " + std::to_string(key.sentence_index) + ")";
}

std::vector<float> TwinEmbedding::combined() const {
  std::vector<float> out(semantic);
  out.insert(out.end(), emotion.begin(), emotion.end());
  return out;
}

EmbeddingCache::EmbeddingCache(std::uint32_t d_sem, std::uint32_t d_emo,
                               std::string provider_tag)
    : d_sem_(d_sem), d_emo_(d_emo), provider_tag_(std::move(provider_tag)) {
  if (d_sem == 0 || d_emo == 0)
    throw ShapeError("embedding dims must be at least 1");
}

void EmbeddingCache::insert(const SentenceKey& key,
                            std::span<const float> combined) {
  if (combined.size() != dim())
    throw ShapeError("embedding for " + to_string(key) + " has length " +
                     std::to_string(combined.size()) + ", expected " +
                     std::to_string(dim()));
  for (float v : combined) {
    if (!std::isfinite(v))
      throw ShapeError("non-finite embedding entry for " + to_string(key));
  }
  if (!index_.emplace(key, data_.size() / dim()).second)
    throw InputError("duplicate embedding key " + to_string(key));
  data_.insert(data_.end(), combined.begin(), combined.end());
}

void EmbeddingCache::insert(const SentenceKey& key, const TwinEmbedding& twin) {
  if (twin.semantic.size() != d_sem_ || twin.emotion.size() != d_emo_)
    throw ShapeError("twin embedding halves do not match cache dims for " +
                     to_string(key));
  insert(key, twin.combined());
}

bool EmbeddingCache::contains(const SentenceKey& key) const {
  return index_.count(key) != 0;
}

std::size_t EmbeddingCache::slot(const SentenceKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end())
    throw InputError("no embedding for key " + to_string(key));
  return it->second;
}

std::span<const float> EmbeddingCache::combined(const SentenceKey& key) const {
  return std::span<const float>(data_).subspan(slot(key) * dim(), dim());
}

TwinEmbedding EmbeddingCache::twin(const SentenceKey& key) const {
  auto c = combined(key);
  return {std::vector<float>(c.begin(), c.begin() + d_sem_),
          std::vector<float>(c.begin() + d_sem_, c.end())};
}

std::vector<SentenceKey> EmbeddingCache::keys() const {
  std::vector<SentenceKey> out;
  out.reserve(index_.size());
  for (const auto& [k, _] : index_) out.push_back(k);
  return out;
}

void EmbeddingCache::validate_coverage(std::span<const MusicItem> items) const {
  std::set<SentenceKey> expected;
  for (const auto& item : items) {
    for (std::size_t s = 0; s < item.songs.size(); ++s) {
      for (std::size_t t = 0; t < item.songs[s].sentences.size(); ++t) {
        expected.insert({item.item_id, static_cast<std::uint32_t>(s),
                         static_cast<std::uint32_t>(t)});
      }
    }
  }
  std::vector<SentenceKey> missing;
  for (const auto& k : expected) {
    if (!contains(k)) missing.push_back(k);
  }
  std::vector<SentenceKey> extra;
  for (const auto& [k, _] : index_) {
    if (!expected.count(k)) extra.push_back(k);
  }
  if (missing.empty() && extra.empty()) return;

  std::ostringstream msg;
  msg << "embedding cache does not cover the corpus";
  auto list = [&](const char* label, const std::vector<SentenceKey>& keys) {
    if (keys.empty()) return;
    msg << "; " << keys.size() << " " << label << ":";
    for (std::size_t i = 0; i < keys.size() && i < 10; ++i)
      msg << " " << to_string(keys[i]);
    if (keys.size() > 10) msg << " ...";
  };
  list("missing key(s)", missing);
  list("unexpected key(s)", extra);
  throw InputError(msg.str());
}

Eigen::MatrixXd EmbeddingCache::item_matrix(const MusicItem& item,
                                            bool normalize_halves,
                                            bool use_emotion) const {
  const Eigen::Index rows = use_emotion ? dim() : d_sem_;
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(item.sentence_count()));
  Eigen::Index col = 0;
  for (std::size_t s = 0; s < item.songs.size(); ++s) {
    for (std::size_t t = 0; t < item.songs[s].sentences.size(); ++t) {
      auto v = combined({item.item_id, static_cast<std::uint32_t>(s),
                         static_cast<std::uint32_t>(t)});
      for (Eigen::Index r = 0; r < rows; ++r) m(r, col) = v[r];
      if (normalize_halves) {
        auto sem = m.col(col).head(d_sem_);
        if (const double n = sem.norm(); n > 0) sem /= n;
        if (use_emotion) {
          auto emo = m.col(col).tail(d_emo_);
          if (const double n = emo.norm(); n > 0) emo /= n;
        }
      }
      ++col;
    }
  }
  return m;
}

std::vector<std::uint8_t> EmbeddingCache::serialize() const {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kCacheVersion);
  w.u32(d_sem_);
  w.u32(d_emo_);
  w.u64(index_.size());
  w.str(provider_tag_);
  for (const auto& [k, _] : index_) {
    w.str(k.item_id);
    w.u32(k.song_index);
    w.u32(k.sentence_index);
  }
  // Records in key order, which is the index order above.
  for (const auto& [_, slot] : index_) {
    const float* p = data_.data() + slot * dim();
    for (std::uint32_t i = 0; i < dim(); ++i) w.f32(p[i]);
  }
  return w.take();
}

std::string EmbeddingCache::content_digest() const {
  return sha256_hex(serialize());
}

std::string EmbeddingCache::signature_digest() const {
  ByteWriter w;
  w.u32(kCacheVersion);
  w.u32(d_sem_);
  w.u32(d_emo_);
  w.str(provider_tag_);
  return sha256_hex(w.take());
}

void write_cache(const EmbeddingCache& cache, const fs::path& path) {
  const auto bytes = cache.serialize();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write embedding cache: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

EmbeddingCache parse_cache(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic))
    throw FormatError("not an embedding cache (bad magic)", 0);
  const auto version_at = r.offset();
  const auto version = r.u32("version");
  if (version != kCacheVersion)
    throw FormatError("unsupported embedding cache version " +
                          std::to_string(version),
                      version_at);
  const auto dims_at = r.offset();
  const auto d_sem = r.u32("d_sem");
  const auto d_emo = r.u32("d_emo");
  if (d_sem == 0 || d_emo == 0)
    throw FormatError("embedding dims must be at least 1", dims_at);
  const auto count = r.u64("record count");
  auto tag = r.str("provider tag");

  EmbeddingCache cache(d_sem, d_emo, std::move(tag));
  std::vector<SentenceKey> keys;
  keys.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto at = r.offset();
    SentenceKey k;
    k.item_id = r.str("key item_id");
    k.song_index = r.u32("key song index");
    k.sentence_index = r.u32("key sentence index");
    if (!keys.empty() && !(keys.back() < k))
      throw FormatError("key index not strictly sorted at " + to_string(k), at);
    keys.push_back(std::move(k));
  }
  const std::uint64_t dim = std::uint64_t{d_sem} + d_emo;
  const std::uint64_t payload = count * dim * 4;
  if (r.remaining() < payload)
    throw FormatError("truncated embedding cache: record payload needs " +
                          std::to_string(payload) + " bytes, " +
                          std::to_string(r.remaining()) + " present",
                      r.offset());
  if (r.remaining() > payload)
    throw FormatError("trailing bytes after record payload (dims mismatch?)",
                      r.offset() + payload);

  std::vector<float> v(dim);
  for (const auto& k : keys) {
    const auto at = r.offset();
    for (auto& x : v) x = r.f32("record");
    try {
      cache.insert(k, v);
    } catch (const Error& e) {
      throw FormatError(e.what(), at);
    }
  }
  return cache;
}

EmbeddingCache open_cache(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embedding cache: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_cache(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

EmbeddingCache open_cache(const fs::path& path,
                          std::span<const MusicItem> items) {
  auto cache = open_cache(path);
  cache.validate_coverage(items);
  return cache;
}

std::vector<float> synthetic_vector(const std::string& sentence,
                                    const SyntheticConfig& config) {
  const std::uint32_t dim = config.d_sem + config.d_emo;
  const std::uint64_t text_hash = fnv1a64(sentence);
  std::vector<float> v(dim);
  for (std::uint32_t j = 0; j < dim; ++j) {
    const std::uint64_t h = derive_seed(text_hash ^ config.seed, j);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    v[j] = static_cast<float>(2.0 * u - 1.0);
  }
  if (config.markers.empty()) return v;

  const auto tokens = tokenize(sentence);
  for (const auto& m : config.markers) {
    if (std::find(tokens.begin(), tokens.end(), m.token) == tokens.end())
      continue;
    const std::uint32_t begin =
        static_cast<std::uint32_t>(index(m.aspect)) * config.block_width;
    for (std::uint32_t j = begin; j < begin + config.block_width; ++j)
      v[j] = static_cast<float>(v[j] + m.offset);
  }
  return v;
}

EmbeddingCache synthetic_provider(std::span<const MusicItem> items,
                                  const SyntheticConfig& config) {
  if (config.d_sem == 0 || config.d_emo == 0)
    throw ShapeError("embedding dims must be at least 1");
  if (!config.markers.empty() &&
      config.block_width * kNumAspects > config.d_sem)
    throw ShapeError("d_sem too small for the reserved marker blocks");

  std::ostringstream tag;
  tag << "synthetic:seed=" << config.seed << ";block=" << config.block_width
      << ";markers=";
  for (const auto& m : config.markers)
    tag << m.token << "@" << aspect_key(m.aspect) << "+" << m.offset << ",";
  EmbeddingCache cache(config.d_sem, config.d_emo, tag.str());

  for (const auto& item : items) {
    for (std::size_t s = 0; s < item.songs.size(); ++s) {
      const auto& sentences = item.songs[s].sentences;
      for (std::size_t t = 0; t < sentences.size(); ++t) {
        cache.insert({item.item_id, static_cast<std::uint32_t>(s),
                      static_cast<std::uint32_t>(t)},
                     synthetic_vector(sentences[t], config));
      }
    }
  }
  return cache;
}

}  // namespace lyricsense
