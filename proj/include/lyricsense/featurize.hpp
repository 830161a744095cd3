#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lyricsense/corpus.hpp"

namespace lyricsense {

// Sparse term -> weight row, sorted by term index.
struct SparseDoc {
  std::vector<std::pair<std::size_t, double>> entries;

  double weight(std::size_t term) const;
  double norm() const;
};

// All sentences of an item joined with newlines.
std::string item_text(const MusicItem& item);

class TfidfModel {
 public:
  TfidfModel() = default;
  // vocabulary and idf are parallel arrays.
  TfidfModel(std::vector<std::string> vocabulary, std::vector<double> idf);

  const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  std::size_t dim() const noexcept { return vocab_.size(); }

  // Returns npos for out-of-vocabulary terms.
  std::size_t term_index(const std::string& term) const;
  double idf(const std::string& term) const;

  // Raw term counts times idf, L2-normalized. OOV terms are ignored.
  SparseDoc transform(const std::string& text) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> vocab_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TfidfFit {
  TfidfModel model;
  std::vector<SparseDoc> rows;
};

// Smoothed idf = ln((1 + N) / (1 + df)) + 1. Throws InputError on an empty
// document set or vocabulary.
TfidfFit tfidf_fit_transform(std::span<const std::string> docs);
TfidfFit tfidf_fit_transform(std::span<const MusicItem> items);

// rows.size() x dim dense matrix.
Eigen::MatrixXd to_dense(std::span<const SparseDoc> rows, std::size_t dim);

struct WordVectors {
  std::size_t dim = 0;
  std::unordered_map<std::string, Eigen::VectorXd> table;
};

// Whitespace-separated "token v1 ... vd" lines. Throws InputError with the
// 1-based line number on a malformed line or inconsistent width.
WordVectors parse_word_vectors(std::istream& in);
WordVectors load_word_vectors(const std::filesystem::path& path);

// Mean over in-vocabulary token occurrences; zero vector (with a warning)
// when every token is out of vocabulary.
Eigen::VectorXd avg_wordvec(const std::string& text, const WordVectors& wv);
// One row per item.
Eigen::MatrixXd avg_wordvec(std::span<const MusicItem> items,
                            const WordVectors& wv);

}  // namespace lyricsense
