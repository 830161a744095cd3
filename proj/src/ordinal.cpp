#include "lyricsense/ordinal.hpp"

#include <cmath>

#include "lyricsense/error.hpp"
#include "lyricsense/random.hpp"

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace lyricsense {
namespace {

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// log(1 + exp(v)) without overflow.
double softplus(double v) {
  return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

}  // namespace

std::string_view strategy_name(OrdinalStrategy s) noexcept {
  switch (s) {
    case OrdinalStrategy::Plain: return "plain";
    case OrdinalStrategy::SoftLabel: return "soft";
    case OrdinalStrategy::BinaryTransform: return "binary";
    case OrdinalStrategy::RankingClassification: return "rank";
  }
  return "?";
}

OrdinalStrategy parse_strategy(std::string_view name) {
  for (auto s : kAllStrategies) {
    if (strategy_name(s) == name) return s;
  }
  throw InputError("unknown strategy '" + std::string(name) +
                   "' (expected plain, soft, binary or rank)");
}

BackboneConfig configure_for(OrdinalStrategy s, BackboneConfig base) {
  base.head_outputs = s == OrdinalStrategy::BinaryTransform
                          ? base.n_classes - 1
                          : base.n_classes;
  base.rank_head = s == OrdinalStrategy::RankingClassification;
  return base;
}

std::vector<double> soften_label(int y, int k) {
  if (k < 1) throw InputError("soften_label: K must be at least 1");
  if (y < 0 || y >= k) throw InputError("soften_label: level outside [0, K)");
  std::vector<double> out(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out[static_cast<std::size_t>(i)] = std::exp(-std::abs(y - i));
    sum += out[static_cast<std::size_t>(i)];
  }
  for (auto& v : out) v /= sum;
  return out;
}

LossGrad kl_loss(const VectorXd& logits, std::span<const double> target) {
  if (static_cast<std::size_t>(logits.size()) != target.size())
    throw ShapeError("kl_loss: target and logits differ in length");
  const VectorXd logp = log_softmax(logits);
  LossGrad out;
  for (Index i = 0; i < logits.size(); ++i) {
    const double t = target[static_cast<std::size_t>(i)];
    if (t > 0) out.loss += t * (std::log(t) - logp[i]);
  }
  out.dlogits = logp.array().exp();
  for (Index i = 0; i < logits.size(); ++i)
    out.dlogits[i] -= target[static_cast<std::size_t>(i)];
  return out;
}

double kl_divergence(std::span<const double> target,
                     std::span<const double> predicted) {
  if (target.size() != predicted.size())
    throw ShapeError("kl_divergence: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] > 0) s += target[i] * std::log(target[i] / predicted[i]);
  }
  return s;
}

LossGrad cross_entropy(const VectorXd& logits, int target) {
  if (target < 0 || target >= logits.size())
    throw ShapeError("cross_entropy: target class out of range");
  const VectorXd logp = log_softmax(logits);
  LossGrad out;
  out.loss = -logp[target];
  out.dlogits = logp.array().exp();
  out.dlogits[target] -= 1.0;
  return out;
}

LossGrad binary_threshold_loss(const VectorXd& logits,
                               std::array<int, 2> targets) {
  if (logits.size() != 2)
    throw ShapeError("binary_threshold_loss: expected two threshold logits");
  LossGrad out;
  out.dlogits.resize(2);
  for (Index j = 0; j < 2; ++j) {
    const double l = logits[j];
    const double t = targets[static_cast<std::size_t>(j)];
    out.loss += softplus(l) - t * l;
    out.dlogits[j] = stable_sigmoid(l) - t;
  }
  return out;
}

std::array<int, 2> binary_targets(SeverityLevel y) noexcept {
  return {code(y) > code(SeverityLevel::Low) ? 1 : 0,
          code(y) > code(SeverityLevel::Medium) ? 1 : 0};
}

std::array<double, 3> binary_decode(double p1, double p2) noexcept {
  std::array<double, 3> d = {1.0 - p1, p1 - p2, p2};
  double sum = 0.0;
  for (auto& v : d) {
    v = std::max(v, 0.0);
    sum += v;
  }
  if (sum <= 0.0) return {1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (auto& v : d) v /= sum;
  return d;
}

RankLabel rank_label(SeverityLevel a, SeverityLevel b) noexcept {
  if (code(a) < code(b)) return RankLabel::Lower;
  if (code(a) > code(b)) return RankLabel::Higher;
  return RankLabel::Same;
}

std::vector<RankPair> sample_rank_pairs(std::span<const Levels> batch_levels,
                                        std::uint64_t seed) {
  const std::size_t n = batch_levels.size();
  if (n < 2) throw InputError("rank pairs need a batch of at least 2 items");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span(order));

  auto make = [&](std::size_t a, std::size_t b) {
    RankPair p{a, b, {}};
    for (std::size_t k = 0; k < kNumAspects; ++k)
      p.labels[k] = rank_label(batch_levels[a][k], batch_levels[b][k]);
    return p;
  };
  std::vector<RankPair> pairs;
  for (std::size_t i = 0; i + 1 < n; i += 2)
    pairs.push_back(make(order[i], order[i + 1]));
  if (n % 2 == 1) pairs.push_back(make(order[n - 1], order[0]));
  return pairs;
}

SeverityLevel argmax_level(std::span<const double> dist) {
  if (dist.empty()) throw ShapeError("argmax of an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return level_from_code(static_cast<int>(best));
}

std::array<double, 3> class_distribution(OrdinalStrategy s,
                                         const VectorXd& head_logits) {
  if (s == OrdinalStrategy::BinaryTransform) {
    if (head_logits.size() != 2)
      throw ShapeError("binary strategy expects two threshold logits");
    return binary_decode(stable_sigmoid(head_logits[0]),
                         stable_sigmoid(head_logits[1]));
  }
  if (head_logits.size() != 3)
    throw ShapeError("strategy expects three class logits");
  const VectorXd p = softmax(head_logits);
  return {p[0], p[1], p[2]};
}

SeverityLevel strategy_decode(OrdinalStrategy s,
                              std::span<const double> head_outputs) {
  if (s == OrdinalStrategy::BinaryTransform) {
    if (head_outputs.size() != 2)
      throw ShapeError("binary strategy expects (p1, p2)");
    const auto d = binary_decode(head_outputs[0], head_outputs[1]);
    return argmax_level(d);
  }
  return argmax_level(head_outputs);
}

ItemLoss item_loss(OrdinalStrategy s, const MatrixXd& logits,
                   const Levels& levels) {
  if (s == OrdinalStrategy::RankingClassification)
    throw InputError("item_loss: ranking strategy needs rank_cls_loss");
  const Index n_aspects = logits.rows();
  if (n_aspects != static_cast<Index>(kNumAspects))
    throw ShapeError("item_loss: logits must have one row per aspect");
  ItemLoss out;
  out.dlogits.resizeLike(logits);
  const double inv = 1.0 / static_cast<double>(n_aspects);
  for (Index a = 0; a < n_aspects; ++a) {
    const VectorXd row = logits.row(a).transpose();
    const int y = code(levels[static_cast<std::size_t>(a)]);
    LossGrad lg;
    switch (s) {
      case OrdinalStrategy::Plain:
        lg = cross_entropy(row, y);
        break;
      case OrdinalStrategy::SoftLabel:
        lg = kl_loss(row, soften_label(y, static_cast<int>(row.size())));
        break;
      case OrdinalStrategy::BinaryTransform:
        lg = binary_threshold_loss(row, binary_targets(level_from_code(y)));
        break;
      case OrdinalStrategy::RankingClassification:
        break;
    }
    out.loss += inv * lg.loss;
    out.dlogits.row(a) = inv * lg.dlogits.transpose();
  }
  return out;
}

VectorXd rank_logits(const ModelParams& params, std::size_t aspect,
                     const VectorXd& x_a, const VectorXd& x_b) {
  const auto& ix = params.idx();
  if (!params.config.rank_head || aspect >= ix.rank_w.size())
    throw InputError("model has no rank head");
  const Index d = x_a.size();
  const auto w = params.mat(ix.rank_w[aspect]);
  return w.middleCols(0, d) * x_a + w.middleCols(d, d) * x_b +
         w.middleCols(2 * d, d) * (x_a - x_b) + params.vec(ix.rank_b[aspect]);
}

PairLoss rank_cls_loss(const ModelParams& params, const DocForward& fwd_a,
                       const DocForward& fwd_b, const Levels& levels_a,
                       const Levels& levels_b,
                       std::span<const RankLabel> rank_labels,
                       const LossWeights& weights, Gradients* grads,
                       double scale) {
  const auto n_aspects = static_cast<std::size_t>(fwd_a.logits.rows());
  if (fwd_b.logits.rows() != fwd_a.logits.rows() ||
      fwd_a.x_out.size() != n_aspects || fwd_b.x_out.size() != n_aspects ||
      rank_labels.size() != n_aspects || n_aspects != kNumAspects)
    throw ShapeError("rank_cls_loss: mismatched aspect counts");
  if (!params.config.rank_head) throw InputError("model has no rank head");

  PairLoss out;
  out.dlogits_a.resizeLike(fwd_a.logits);
  out.dlogits_b.resizeLike(fwd_b.logits);
  out.dx_out_a.resize(n_aspects);
  out.dx_out_b.resize(n_aspects);

  const double inv_cls = 1.0 / static_cast<double>(2 * n_aspects);
  const double inv_rank = 1.0 / static_cast<double>(n_aspects);
  const auto& ix = params.idx();
  for (std::size_t a = 0; a < n_aspects; ++a) {
    const auto row = static_cast<Index>(a);
    auto ce_a = cross_entropy(fwd_a.logits.row(row).transpose(), code(levels_a[a]));
    auto ce_b = cross_entropy(fwd_b.logits.row(row).transpose(), code(levels_b[a]));
    out.loss_cls += inv_cls * (ce_a.loss + ce_b.loss);
    out.dlogits_a.row(row) = weights.cls * inv_cls * ce_a.dlogits.transpose();
    out.dlogits_b.row(row) = weights.cls * inv_cls * ce_b.dlogits.transpose();

    const VectorXd& xa = fwd_a.x_out[a];
    const VectorXd& xb = fwd_b.x_out[a];
    auto ce_r = cross_entropy(rank_logits(params, a, xa, xb),
                              static_cast<int>(rank_labels[a]));
    out.loss_rank += inv_rank * ce_r.loss;

    const VectorXd dr = weights.rank * inv_rank * ce_r.dlogits;
    const Index d = xa.size();
    const auto w = params.mat(ix.rank_w[a]);
    const VectorXd g_diff = w.middleCols(2 * d, d).transpose() * dr;
    out.dx_out_a[a] = w.middleCols(0, d).transpose() * dr + g_diff;
    out.dx_out_b[a] = w.middleCols(d, d).transpose() * dr - g_diff;
    if (grads) {
      if (grads->values.size() != params.values.size())
        grads->values.assign(params.values.size(), 0.0);
      auto gw = params.layout.mat(std::span<double>(grads->values), ix.rank_w[a]);
      const VectorXd sdr = scale * dr;
      gw.middleCols(0, d).noalias() += sdr * xa.transpose();
      gw.middleCols(d, d).noalias() += sdr * xb.transpose();
      gw.middleCols(2 * d, d).noalias() += sdr * (xa - xb).transpose();
      params.layout.vec(std::span<double>(grads->values), ix.rank_b[a]) += sdr;
    }
  }
  out.total = weights.cls * out.loss_cls + weights.rank * out.loss_rank;
  return out;
}

}  // namespace lyricsense
