#include "lyricsense/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lyricsense/error.hpp"
#include "lyricsense/log.hpp"
#include "lyricsense/text.hpp"

namespace lyricsense {

double SparseDoc::weight(std::size_t term) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), term,
      [](const auto& e, std::size_t t) { return e.first < t; });
  return (it != entries.end() && it->first == term) ? it->second : 0.0;
}

double SparseDoc::norm() const {
  double s = 0.0;
  for (const auto& [_, w] : entries) s += w * w;
  return std::sqrt(s);
}

std::string item_text(const MusicItem& item) {
  std::string out;
  for (const auto& song : item.songs) {
    for (const auto& s : song.sentences) {
      out += s;
      out += '\n';
    }
  }
  return out;
}

TfidfModel::TfidfModel(std::vector<std::string> vocabulary,
                       std::vector<double> idf)
    : vocab_(std::move(vocabulary)), idf_(std::move(idf)) {
  if (vocab_.size() != idf_.size())
    throw ShapeError("tf-idf vocabulary and idf sizes differ");
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], i);
}

std::size_t TfidfModel::term_index(const std::string& term) const {
  auto it = index_.find(term);
  return it == index_.end() ? npos : it->second;
}

double TfidfModel::idf(const std::string& term) const {
  const auto i = term_index(term);
  if (i == npos) throw InputError("term not in vocabulary: '" + term + "'");
  return idf_[i];
}

SparseDoc TfidfModel::transform(const std::string& text) const {
  std::map<std::size_t, double> counts;
  for (const auto& tok : tokenize(text)) {
    if (auto i = term_index(tok); i != npos) counts[i] += 1.0;
  }
  SparseDoc doc;
  double sq = 0.0;
  for (const auto& [i, c] : counts) {
    const double w = c * idf_[i];
    doc.entries.emplace_back(i, w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& [_, w] : doc.entries) w *= inv;
  }
  return doc;
}

TfidfFit tfidf_fit_transform(std::span<const std::string> docs) {
  if (docs.empty()) throw InputError("tf-idf: no documents");

  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    auto toks = tokenize(d);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df[std::move(t)];
  }
  if (df.empty()) throw InputError("tf-idf: empty vocabulary");

  const double n = static_cast<double>(docs.size());
  std::vector<std::string> vocab;
  std::vector<double> idf;
  vocab.reserve(df.size());
  idf.reserve(df.size());
  for (const auto& [term, count] : df) {
    vocab.push_back(term);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }

  TfidfFit fit{TfidfModel(std::move(vocab), std::move(idf)), {}};
  fit.rows.reserve(docs.size());
  for (const auto& d : docs) fit.rows.push_back(fit.model.transform(d));
  return fit;
}

TfidfFit tfidf_fit_transform(std::span<const MusicItem> items) {
  std::vector<std::string> docs;
  docs.reserve(items.size());
  for (const auto& item : items) docs.push_back(item_text(item));
  return tfidf_fit_transform(docs);
}

Eigen::MatrixXd to_dense(std::span<const SparseDoc> rows, std::size_t dim) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                            static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [i, w] : rows[r].entries) {
      if (i >= dim) throw ShapeError("sparse term index beyond dense width");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = w;
    }
  }
  return m;
}

WordVectors parse_word_vectors(std::istream& in) {
  WordVectors wv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    std::string field;
    while (ss >> field) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != field.size() || !std::isfinite(v))
        throw InputError("word vectors line " + std::to_string(line_no) +
                         ": not a number: '" + field + "'");
      values.push_back(v);
    }
    if (values.empty())
      throw InputError("word vectors line " + std::to_string(line_no) +
                       ": token without values");
    if (wv.dim == 0) wv.dim = values.size();
    if (values.size() != wv.dim)
      throw InputError("word vectors line " + std::to_string(line_no) +
                       ": expected " + std::to_string(wv.dim) +
                       " values, got " + std::to_string(values.size()));
    wv.table[token] =
        Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  if (wv.dim == 0) throw InputError("word vectors: no entries");
  return wv;
}

WordVectors load_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open word vectors: " + path.string());
  return parse_word_vectors(in);
}

Eigen::VectorXd avg_wordvec(const std::string& text, const WordVectors& wv) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(wv.dim));
  std::size_t hits = 0;
  for (const auto& tok : tokenize(text)) {
    auto it = wv.table.find(tok);
    if (it == wv.table.end()) continue;
    sum += it->second;
    ++hits;
  }
  if (hits == 0) {
    warn("document has no in-vocabulary tokens; using zero vector");
    return sum;
  }
  return sum / static_cast<double>(hits);
}

Eigen::MatrixXd avg_wordvec(std::span<const MusicItem> items,
                            const WordVectors& wv) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(items.size()),
                    static_cast<Eigen::Index>(wv.dim));
  for (std::size_t i = 0; i < items.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = avg_wordvec(item_text(items[i]), wv);
  return m;
}

}  // namespace lyricsense
