#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "lyricsense/aspect.hpp"

namespace lyricsense {

// Rows are true levels, columns predicted levels.
using Confusion = std::array<std::array<std::uint64_t, 3>, 3>;

Confusion confusion_matrix(std::span<const SeverityLevel> truth,
                           std::span<const SeverityLevel> predicted);

std::array<double, 3> per_class_f1(const Confusion& m);

// Unweighted mean of per-class F1; a class with no true and no predicted
// instances scores 0. Throws InputError on an all-zero matrix.
double macro_f1(const Confusion& m);

// Misclassifications split by how many levels they cross.
struct ErrorSpan {
  std::uint64_t one_level = 0;
  std::uint64_t two_level = 0;

  std::uint64_t total() const noexcept { return one_level + two_level; }
  // two_level / total, or 0 when there are no errors.
  double two_level_ratio() const noexcept;
};
ErrorSpan error_span(const Confusion& m);

}  // namespace lyricsense
