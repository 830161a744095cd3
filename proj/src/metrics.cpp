#include "lyricsense/metrics.hpp"

#include "lyricsense/error.hpp"

namespace lyricsense {

Confusion confusion_matrix(std::span<const SeverityLevel> truth,
                           std::span<const SeverityLevel> predicted) {
  if (truth.size() != predicted.size())
    throw ShapeError("confusion_matrix: truth and prediction lengths differ");
  Confusion m{};
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++m[static_cast<std::size_t>(code(truth[i]))]
       [static_cast<std::size_t>(code(predicted[i]))];
  return m;
}

std::array<double, 3> per_class_f1(const Confusion& m) {
  std::array<double, 3> f1{};
  for (std::size_t k = 0; k < 3; ++k) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      row += m[k][j];
      col += m[j][k];
    }
    const std::uint64_t tp = m[k][k];
    // 2tp / (2tp + fp + fn) equals the harmonic mean of precision and recall
    // and is 0 whenever tp is 0, including the absent-class case.
    const std::uint64_t denom = row + col;
    f1[k] = (tp == 0 || denom == 0)
                ? 0.0
                : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return f1;
}

double macro_f1(const Confusion& m) {
  std::uint64_t total = 0;
  for (const auto& r : m)
    for (auto v : r) total += v;
  if (total == 0) throw InputError("macro_f1: empty confusion matrix");
  const auto f1 = per_class_f1(m);
  return (f1[0] + f1[1] + f1[2]) / 3.0;
}

double ErrorSpan::two_level_ratio() const noexcept {
  return total() == 0 ? 0.0
                      : static_cast<double>(two_level) / static_cast<double>(total());
}

ErrorSpan error_span(const Confusion& m) {
  ErrorSpan e;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      (i > j ? i - j : j - i) == 1 ? e.one_level += m[i][j] : e.two_level += m[i][j];
    }
  }
  return e;
}

}  // namespace lyricsense
