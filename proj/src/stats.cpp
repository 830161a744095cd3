#include "lyricsense/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "lyricsense/error.hpp"
#include "lyricsense/random.hpp"

namespace lyricsense {

std::vector<double> mid_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("correlation: length mismatch");
  if (x.size() < 2) throw InputError("correlation needs at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw InputError("correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman: length mismatch");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  return pearson(rx, ry);
}

double student_t_two_sided(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double spearman_p_value(double rho, std::size_t n) {
  if (n < 3) return 1.0;
  if (std::abs(rho) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(dof / (1.0 - rho * rho));
  return std::clamp(student_t_two_sided(t, dof), 0.0, 1.0);
}

double spearman_permutation_p_value(std::span<const double> x,
                                    std::span<const double> y,
                                    std::size_t permutations,
                                    std::uint64_t seed) {
  const double observed = std::abs(spearman_rho(x, y));
  const auto rx = mid_ranks(x);
  auto ry = mid_ranks(y);
  Rng rng(seed);
  std::size_t hits = 1;
  // Tolerance absorbs rounding between arrangements with equal |rho|.
  const double tol = 1e-12;
  for (std::size_t i = 0; i < permutations; ++i) {
    rng.shuffle(std::span(ry));
    if (std::abs(pearson(rx, ry)) >= observed - tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(permutations + 1);
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("paired t-test: length mismatch");
  if (a.size() < 2) throw InputError("paired t-test needs at least 2 pairs");
  const double n = static_cast<double>(a.size());
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  // Differences that are all equal leave no variance to test against.
  const bool constant = std::all_of(d.begin(), d.end(),
                                    [&](double v) { return v == d.front(); });
  if (constant || sd == 0.0) {
    if (mean == 0.0) return {0.0, 1.0};
    return {std::copysign(std::numeric_limits<double>::infinity(), mean), 0.0};
  }
  const double t = mean / (sd / std::sqrt(n));
  return {t, std::clamp(student_t_two_sided(t, n - 1.0), 0.0, 1.0)};
}

}  // namespace lyricsense
