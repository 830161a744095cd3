#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lyricsense/aspect.hpp"
#include "lyricsense/backbone.hpp"

namespace lyricsense {

enum class OrdinalStrategy { Plain, SoftLabel, BinaryTransform, RankingClassification };

inline constexpr std::array<OrdinalStrategy, 4> kAllStrategies = {
    OrdinalStrategy::Plain, OrdinalStrategy::SoftLabel,
    OrdinalStrategy::BinaryTransform, OrdinalStrategy::RankingClassification};

// CLI names: plain, soft, binary, rank.
std::string_view strategy_name(OrdinalStrategy s) noexcept;
OrdinalStrategy parse_strategy(std::string_view name);

// Head width each strategy needs, and whether it carries a rank comparator.
BackboneConfig configure_for(OrdinalStrategy s, BackboneConfig base);

using Levels = std::array<SeverityLevel, kNumAspects>;

// exp(-|y - i|) normalized over the K levels.
std::vector<double> soften_label(int y, int k);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd dlogits;
};

// KL(target || softmax(logits)), evaluated in log space. Gradient w.r.t.
// the logits is softmax(logits) - target.
LossGrad kl_loss(const Eigen::VectorXd& logits, std::span<const double> target);

// KL(target || predicted) on probability vectors directly. Entries where the
// target is zero contribute nothing.
double kl_divergence(std::span<const double> target,
                     std::span<const double> predicted);

LossGrad cross_entropy(const Eigen::VectorXd& logits, int target);

// Sum of the per-threshold logistic losses; targets from binary_targets.
LossGrad binary_threshold_loss(const Eigen::VectorXd& logits,
                               std::array<int, 2> targets);

// (y > Low, y > Medium).
std::array<int, 2> binary_targets(SeverityLevel y) noexcept;

// (1 - p1, p1 - p2, p2), negatives clamped to zero then renormalized;
// uniform if everything clamps away.
std::array<double, 3> binary_decode(double p1, double p2) noexcept;

enum class RankLabel { Lower = 0, Same = 1, Higher = 2 };

// Rating of A relative to B.
RankLabel rank_label(SeverityLevel a, SeverityLevel b) noexcept;

struct RankPair {
  std::size_t a = 0;
  std::size_t b = 0;
  std::array<RankLabel, kNumAspects> labels{};
};

// Shuffles positions 0..n-1 with the seed and pairs consecutive entries; an
// odd leftover pairs with the first shuffled item. Throws for n < 2.
std::vector<RankPair> sample_rank_pairs(std::span<const Levels> batch_levels,
                                        std::uint64_t seed);

// Argmax with ties going to the lower severity level.
SeverityLevel argmax_level(std::span<const double> dist);

// Class distribution for one aspect's head row: softmax, or binary_decode of
// the two threshold sigmoids.
std::array<double, 3> class_distribution(OrdinalStrategy s,
                                         const Eigen::VectorXd& head_logits);

// head_outputs are post-activation: K probabilities, or (p1, p2) for
// BinaryTransform.
SeverityLevel strategy_decode(OrdinalStrategy s,
                              std::span<const double> head_outputs);

struct LossWeights {
  double cls = 1.0;
  double rank = 1.0;
};

// Per-item multi-task loss for Plain, SoftLabel and BinaryTransform:
// mean over aspects. dlogits has the shape of fwd.logits.
struct ItemLoss {
  double loss = 0.0;
  Eigen::MatrixXd dlogits;
};
ItemLoss item_loss(OrdinalStrategy s, const Eigen::MatrixXd& logits,
                   const Levels& levels);

struct PairLoss {
  double loss_cls = 0.0;
  double loss_rank = 0.0;
  double total = 0.0;
  Eigen::MatrixXd dlogits_a, dlogits_b;
  std::vector<Eigen::VectorXd> dx_out_a, dx_out_b;
};

// Rank head logits for one aspect: W [x_a; x_b; x_a - x_b] + b.
Eigen::VectorXd rank_logits(const ModelParams& params, std::size_t aspect,
                            const Eigen::VectorXd& x_a,
                            const Eigen::VectorXd& x_b);

// l_cls: mean cross-entropy over both members and all aspects.
// l_rank: mean over aspects of the 3-way rank cross-entropy.
// total = w.cls * l_cls + w.rank * l_rank. Rank-head gradients are
// accumulated into `grads` (times scale); backbone upstream gradients are
// returned for backward_into.
PairLoss rank_cls_loss(const ModelParams& params, const DocForward& fwd_a,
                       const DocForward& fwd_b, const Levels& levels_a,
                       const Levels& levels_b,
                       std::span<const RankLabel> rank_labels,
                       const LossWeights& weights, Gradients* grads = nullptr,
                       double scale = 1.0);

}  // namespace lyricsense
