#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lyricsense {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

enum class StepStatus { Applied, SkippedNonFinite };

// One Adam update in place. A gradient with any non-finite entry leaves
// params and state untouched and returns SkippedNonFinite.
StepStatus sgd_step(std::span<double> params, std::span<const double> grads,
                    AdamState& state, const AdamConfig& config = {});

}  // namespace lyricsense
