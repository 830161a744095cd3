#include "doctest.h"

#include <cmath>

#include "lyricsense/error.hpp"
#include "lyricsense/model.hpp"
#include "lyricsense/optimizer.hpp"
#include "lyricsense/ordinal.hpp"
#include "lyricsense/random.hpp"

using namespace lyricsense;
using Eigen::VectorXd;

TEST_CASE("soften_label matches high-precision reference values") {
  // Reference: 30-digit evaluation of exp(-|y - i|) / sum_k exp(-|y - k|).
  const auto low = soften_label(0, 3);
  CHECK(std::abs(low[0] - 0.66524095577482188953) < 1e-15);
  CHECK(std::abs(low[1] - 0.24472847105479765247) < 1e-15);
  CHECK(std::abs(low[2] - 0.090030573170380457998) < 1e-15);
  const auto mid = soften_label(1, 3);
  CHECK(std::abs(mid[0] - 0.21194155761708544507) < 1e-15);
  CHECK(std::abs(mid[1] - 0.57611688476582910986) < 1e-15);
  CHECK(mid[0] == mid[2]);
  const auto five = soften_label(2, 5);
  CHECK(std::abs(five[2] - 0.49839778846450252429) < 1e-15);
  CHECK(std::abs(five[0] - 0.067450805866344826942) < 1e-15);
  CHECK(soften_label(0, 1) == std::vector<double>{1.0});
  CHECK_THROWS_AS(soften_label(0, 0), InputError);
  CHECK_THROWS_AS(soften_label(3, 3), InputError);
}

TEST_CASE("soften_label is normalized, positive and unimodal") {
  for (int k = 1; k <= 5; ++k) {
    for (int y = 0; y < k; ++y) {
      const auto t = soften_label(y, k);
      double total = 0.0;
      for (double v : t) {
        CHECK(v > 0.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          if (std::abs(i - y) < std::abs(j - y)) CHECK(t[static_cast<std::size_t>(i)] > t[static_cast<std::size_t>(j)]);
    }
  }
}

TEST_CASE("kl_loss: zero at the target, ln 3 against uniform, matches a direct sum") {
  const std::vector<double> t = soften_label(1, 3);
  VectorXd logits(3);
  for (int i = 0; i < 3; ++i) logits(i) = std::log(t[static_cast<std::size_t>(i)]) + 0.7;
  const LossGrad at_target = kl_loss(logits, t);
  CHECK(std::abs(at_target.loss) < 1e-14);
  CHECK(at_target.dlogits.norm() < 1e-14);

  const LossGrad uni = kl_loss(VectorXd::Zero(3), std::vector<double>{1, 0, 0});
  CHECK(uni.loss == doctest::Approx(std::log(3.0)).epsilon(1e-14));

  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd z(3);
    for (int i = 0; i < 3; ++i) z(i) = rng.uniform(-4, 4);
    const auto target = soften_label(static_cast<int>(rng.below(3)), 3);
    double m = z.maxCoeff(), s = 0.0;
    for (int i = 0; i < 3; ++i) s += std::exp(z(i) - m);
    double ref = 0.0;
    std::vector<double> p(3);
    for (int i = 0; i < 3; ++i) {
      p[static_cast<std::size_t>(i)] = std::exp(z(i) - m) / s;
      ref += target[static_cast<std::size_t>(i)] * std::log(target[static_cast<std::size_t>(i)] / p[static_cast<std::size_t>(i)]);
    }
    const LossGrad lg = kl_loss(z, target);
    CHECK(std::abs(lg.loss - ref) < 1e-10);
    CHECK(std::abs(kl_divergence(target, p) - ref) < 1e-10);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(lg.dlogits(i) - (p[static_cast<std::size_t>(i)] - target[static_cast<std::size_t>(i)])) < 1e-12);
  }

  // Extreme logits stay finite: no clamping, log-space evaluation.
  VectorXd extreme(3);
  extreme << 800, -800, 0;
  const LossGrad e = kl_loss(extreme, soften_label(1, 3));
  CHECK(std::isfinite(e.loss));
  CHECK(e.loss > 100);
}

TEST_CASE("cross entropy and binary threshold loss") {
  const LossGrad ce = cross_entropy(VectorXd::Zero(3), 2);
  CHECK(ce.loss == doctest::Approx(std::log(3.0)));
  CHECK(ce.dlogits(2) == doctest::Approx(1.0 / 3.0 - 1.0));

  VectorXd z(2);
  z << 0.0, 0.0;
  const LossGrad b = binary_threshold_loss(z, {1, 0});
  CHECK(b.loss == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(b.dlogits(0) == doctest::Approx(-0.5));
  CHECK(b.dlogits(1) == doctest::Approx(0.5));
}

TEST_CASE("binary targets and decode") {
  CHECK(binary_targets(SeverityLevel::Low) == std::array<int, 2>{0, 0});
  CHECK(binary_targets(SeverityLevel::Medium) == std::array<int, 2>{1, 0});
  CHECK(binary_targets(SeverityLevel::High) == std::array<int, 2>{1, 1});

  auto d = binary_decode(0.8, 0.3);
  CHECK(d[0] == doctest::Approx(0.2));
  CHECK(d[1] == doctest::Approx(0.5));
  CHECK(d[2] == doctest::Approx(0.3));
  CHECK(binary_decode(1.0, 1.0) == std::array<double, 3>{0.0, 0.0, 1.0});
  auto nm = binary_decode(0.3, 0.8);
  CHECK(nm[0] == doctest::Approx(0.7 / 1.5).epsilon(1e-12));
  CHECK(nm[1] == 0.0);
  CHECK(nm[2] == doctest::Approx(0.8 / 1.5).epsilon(1e-12));
  CHECK(nm[0] == doctest::Approx(0.46667).epsilon(1e-4));

  for (SeverityLevel lv : {SeverityLevel::Low, SeverityLevel::Medium, SeverityLevel::High}) {
    const auto t = binary_targets(lv);
    const auto oh = binary_decode(t[0], t[1]);
    for (int k = 0; k < 3; ++k) CHECK(oh[static_cast<std::size_t>(k)] == (k == code(lv) ? 1.0 : 0.0));
  }
}

TEST_CASE("strategy decode") {
  CHECK(strategy_decode(OrdinalStrategy::SoftLabel, std::vector<double>{0.2, 0.5, 0.3}) ==
        SeverityLevel::Medium);
  CHECK(strategy_decode(OrdinalStrategy::BinaryTransform, std::vector<double>{0.8, 0.3}) ==
        SeverityLevel::Medium);
  CHECK(strategy_decode(OrdinalStrategy::Plain, std::vector<double>{0.4, 0.4, 0.2}) ==
        SeverityLevel::Low);
  CHECK(argmax_level(std::vector<double>{0.1, 0.45, 0.45}) == SeverityLevel::Medium);

  VectorXd logits(2);
  logits << 100.0, -100.0;
  const auto dist = class_distribution(OrdinalStrategy::BinaryTransform, logits);
  CHECK(dist[1] == doctest::Approx(1.0));
}

TEST_CASE("rank labels and pair sampling") {
  CHECK(rank_label(SeverityLevel::Low, SeverityLevel::High) == RankLabel::Lower);
  CHECK(rank_label(SeverityLevel::Medium, SeverityLevel::Medium) == RankLabel::Same);
  CHECK(rank_label(SeverityLevel::High, SeverityLevel::Low) == RankLabel::Higher);

  std::vector<Levels> batch(5);
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (auto& l : batch[i]) l = level_from_code(static_cast<int>(i % 3));
  const auto pairs = sample_rank_pairs(batch, 9);
  CHECK(pairs.size() == 3);
  std::vector<int> seen(5, 0);
  for (const auto& p : pairs) {
    CHECK(p.a != p.b);
    ++seen[p.a];
    ++seen[p.b];
    for (std::size_t a = 0; a < kNumAspects; ++a)
      CHECK(p.labels[a] == rank_label(batch[p.a][a], batch[p.b][a]));
  }
  // The leftover pairs with the first shuffled item, which appears twice.
  int twice = 0;
  for (int s : seen) {
    CHECK(s >= 1);
    twice += s == 2;
  }
  CHECK(twice == 1);
  CHECK(pairs.back().b == pairs.front().a);

  const auto again = sample_rank_pairs(batch, 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(again[i].a == pairs[i].a);
    CHECK(again[i].b == pairs[i].b);
  }
  CHECK_THROWS_AS(sample_rank_pairs(std::span(batch).first(1), 1), InputError);
}

TEST_CASE("rank loss of identical items with a uniform rank head is l_cls + ln 3") {
  BackboneConfig base;
  base.input_dim = 4;
  base.hidden = 3;
  ModelParams p = ModelParams::init(configure_for(OrdinalStrategy::RankingClassification, base));
  for (std::size_t a = 0; a < kNumAspects; ++a) {
    p.mat(p.idx().rank_w[a]).setZero();
    p.vec(p.idx().rank_b[a]).setZero();
  }
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  const DocForward f = forward(p, x);
  Levels lv{SeverityLevel::Low, SeverityLevel::Medium, SeverityLevel::High,
            SeverityLevel::Low, SeverityLevel::Medium};
  std::array<RankLabel, kNumAspects> same{};
  same.fill(RankLabel::Same);
  const PairLoss l = rank_cls_loss(p, f, f, lv, lv, same, {});
  CHECK(l.loss_rank == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(l.total == doctest::Approx(l.loss_cls + std::log(3.0)).epsilon(1e-14));
  const ItemLoss single = item_loss(OrdinalStrategy::Plain, f.logits, lv);
  CHECK(l.loss_cls == doctest::Approx(single.loss).epsilon(1e-14));
  CHECK(std::isfinite(l.total));

  std::array<RankLabel, 4> wrong{};
  CHECK_THROWS_AS(rank_cls_loss(p, f, f, lv, lv, wrong, {}), ShapeError);
}

TEST_CASE("configure_for sets head arity") {
  BackboneConfig base;
  base.input_dim = 4;
  CHECK(configure_for(OrdinalStrategy::Plain, base).head_outputs == 3);
  CHECK(configure_for(OrdinalStrategy::BinaryTransform, base).head_outputs == 2);
  CHECK(configure_for(OrdinalStrategy::RankingClassification, base).rank_head);
  CHECK_FALSE(configure_for(OrdinalStrategy::SoftLabel, base).rank_head);
  CHECK(parse_strategy("rank") == OrdinalStrategy::RankingClassification);
  CHECK(strategy_name(OrdinalStrategy::SoftLabel) == "soft");
  CHECK_THROWS_AS(parse_strategy("ordinal"), InputError);
}

TEST_CASE("one small Adam step on a repeated example lowers its loss") {
  BackboneConfig base;
  base.input_dim = 4;
  base.hidden = 3;
  base.seed = 2;
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  Levels lv{SeverityLevel::High, SeverityLevel::Low, SeverityLevel::Medium,
            SeverityLevel::High, SeverityLevel::Low};
  for (OrdinalStrategy s : kAllStrategies) {
    Model m = Model::create(s, base);
    auto loss_and_grad = [&](Gradients* g) {
      const DocForward f = forward(m.params, x);
      if (s != OrdinalStrategy::RankingClassification) {
        const ItemLoss l = item_loss(s, f.logits, lv);
        if (g) backward_into(m.params, f, l.dlogits, nullptr, *g);
        return l.loss;
      }
      std::array<RankLabel, kNumAspects> same{};
      same.fill(RankLabel::Same);
      const PairLoss l = rank_cls_loss(m.params, f, f, lv, lv, same, m.weights, g);
      if (g) {
        backward_into(m.params, f, l.dlogits_a, &l.dx_out_a, *g);
        backward_into(m.params, f, l.dlogits_b, &l.dx_out_b, *g);
      }
      return l.total;
    };
    Gradients g = Gradients::zeros_like(m.params);
    const double before = loss_and_grad(&g);
    CHECK(std::isfinite(before));
    CHECK(before >= 0.0);
    AdamState st;
    sgd_step(m.params.values, g.values, st, AdamConfig{});
    const double after = loss_and_grad(nullptr);
    INFO(strategy_name(s));
    CHECK(after < before);
  }
}
