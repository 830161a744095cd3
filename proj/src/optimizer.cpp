#include "lyricsense/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "lyricsense/error.hpp"

namespace lyricsense {

StepStatus sgd_step(std::span<double> params, std::span<const double> grads,
                    AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size())
    throw ShapeError("optimizer: parameter and gradient sizes differ");
  if (!std::all_of(grads.begin(), grads.end(),
                   [](double g) { return std::isfinite(g); }))
    return StepStatus::SkippedNonFinite;
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size())
    throw ShapeError("optimizer state does not match parameter count");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
  return StepStatus::Applied;
}

}  // namespace lyricsense
