#include "doctest.h"

#include <vector>

#include "lyricsense/error.hpp"
#include "lyricsense/metrics.hpp"

using namespace lyricsense;

namespace {

// Truth marginals evaluated against an all-Low prediction.
Confusion all_low(std::uint64_t low, std::uint64_t mid, std::uint64_t high) {
  Confusion m{};
  m[0][0] = low;
  m[1][0] = mid;
  m[2][0] = high;
  return m;
}

}  // namespace

TEST_CASE("confusion matrix counts truth rows against predicted columns") {
  const std::vector<SeverityLevel> t{SeverityLevel::Low, SeverityLevel::High, SeverityLevel::High};
  const std::vector<SeverityLevel> p{SeverityLevel::Low, SeverityLevel::Medium, SeverityLevel::High};
  const Confusion m = confusion_matrix(t, p);
  CHECK(m[0][0] == 1);
  CHECK(m[2][1] == 1);
  CHECK(m[2][2] == 1);
  CHECK_THROWS_AS(confusion_matrix(t, std::span(p).first(2)), ShapeError);
}

TEST_CASE("macro F1 values") {
  Confusion diag{};
  diag[0][0] = 3;
  diag[1][1] = 2;
  diag[2][2] = 1;
  CHECK(macro_f1(diag) == 1.0);

  // Per class: 2*2/(3+2), 2*1/(2+2), 2*1/(1+2).
  const Confusion m{{{2, 1, 0}, {0, 1, 1}, {0, 0, 1}}};
  const auto f1 = per_class_f1(m);
  CHECK(f1[0] == doctest::Approx(0.8));
  CHECK(f1[1] == doctest::Approx(0.5));
  CHECK(f1[2] == doctest::Approx(2.0 / 3.0));
  CHECK(macro_f1(m) == doctest::Approx((0.8 + 0.5 + 2.0 / 3.0) / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(macro_f1(Confusion{}), InputError);
}

TEST_CASE("predict-all-majority macro F1 equals 2p / (3 (p + 1))") {
  const double p = 844.0 / 1119.0;
  CHECK(macro_f1(all_low(844, 190, 85)) == doctest::Approx(2.0 * p / (3.0 * (p + 1.0))).epsilon(1e-12));
  CHECK(macro_f1(all_low(844, 190, 85)) == doctest::Approx(0.28663).epsilon(1e-4));

  // A class absent from both truth and prediction still counts as 0.
  Confusion only_low{};
  only_low[0][0] = 5;
  CHECK(macro_f1(only_low) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("macro F1 is invariant under simultaneous relabeling") {
  const Confusion m{{{5, 2, 1}, {3, 4, 0}, {1, 1, 6}}};
  const std::array<std::size_t, 3> perm{2, 0, 1};
  Confusion r{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r[perm[i]][perm[j]] = m[i][j];
  CHECK(macro_f1(r) == doctest::Approx(macro_f1(m)).epsilon(1e-15));
}

TEST_CASE("error spans split one- and two-level mistakes") {
  const Confusion m{{{5, 2, 1}, {3, 4, 0}, {4, 1, 6}}};
  const ErrorSpan e = error_span(m);
  CHECK(e.one_level == 6);
  CHECK(e.two_level == 5);
  CHECK(e.two_level_ratio() == doctest::Approx(5.0 / 11.0));
  CHECK(error_span(Confusion{}).two_level_ratio() == 0.0);
}
