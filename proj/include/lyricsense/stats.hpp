#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lyricsense {

// 1-based ranks with ties sharing their average rank.
std::vector<double> mid_ranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of mid-ranks. Throws InputError for n < 2, length
// mismatch, or a constant input.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Two-sided p-value via t = rho * sqrt((n - 2) / (1 - rho^2)) with n - 2
// degrees of freedom. |rho| = 1 gives 0.
double spearman_p_value(double rho, std::size_t n);

// Two-sided permutation p-value: share of shuffles of y (plus the observed
// arrangement) whose |rho| reaches the observed |rho|.
double spearman_permutation_p_value(std::span<const double> x,
                                    std::span<const double> y,
                                    std::size_t permutations,
                                    std::uint64_t seed);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

// Paired t-test on a - b with n - 1 degrees of freedom, two-sided.
// Zero-variance differences: mean 0 gives (0, 1), otherwise p = 0 with t
// signed infinity.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

// Two-sided tail probability of Student's t.
double student_t_two_sided(double t, double dof);

}  // namespace lyricsense
