#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "lyricsense/analysis.hpp"
#include "lyricsense/harness.hpp"
#include "lyricsense/synthetic.hpp"

using namespace lyricsense;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Item counts per level and reported majority-voting macro-F1 (in points).
struct AspectTable {
  Aspect aspect;
  std::array<int, 3> counts;
  double reported;
};

constexpr std::array<AspectTable, kNumAspects> kTables = {{
    {Aspect::Violence, {844, 190, 85}, 28.65},
    {Aspect::Substance, {743, 294, 82}, 26.59},
    {Aspect::Sex, {663, 319, 137}, 24.76},
    {Aspect::Consumerism, {880, 209, 30}, 30.22},
    {Aspect::Positive, {736, 314, 69}, 26.46},
}};

Outcome majority_cross_check() {
  Outcome o{true, ""};
  for (const auto& t : kTables) {
    std::vector<SeverityLevel> truth;
    for (int lv = 0; lv < 3; ++lv) truth.insert(truth.end(), t.counts[lv], level_from_code(lv));
    const auto pred = majority_predict(truth, truth.size());
    const double f1 = 100.0 * macro_f1(confusion_matrix(truth, pred));
    o.detail += fmt("%s %.2f/%.2f ", std::string(aspect_key(t.aspect)).c_str(), f1, t.reported);
    if (t.aspect == Aspect::Consumerism) {
      o.pass = o.pass && std::abs(f1 - 29.35) < 0.005;
    } else {
      o.pass = o.pass && std::abs(f1 - t.reported) <= 0.5;
    }
  }
  return o;
}

Outcome ordinal_encoders() {
  double worst = 0.0;
  for (int k = 2; k <= 5; ++k) {
    for (int y = 0; y < k; ++y) {
      const auto q = soften_label(y, k);
      long double z = 0.0L;
      for (int i = 0; i < k; ++i) z += std::exp(-static_cast<long double>(std::abs(y - i)));
      for (int i = 0; i < k; ++i) {
        const long double ref = std::exp(-static_cast<long double>(std::abs(y - i))) / z;
        worst = std::max(worst, static_cast<double>(std::abs(static_cast<long double>(q[i]) - ref)));
      }
    }
  }
  bool round_trip = true;
  for (int lv = 0; lv < 3; ++lv) {
    const auto t = binary_targets(level_from_code(lv));
    const auto d = binary_decode(t[0], t[1]);
    round_trip = round_trip && argmax_level(d) == level_from_code(lv);
    for (int c = 0; c < 3; ++c) round_trip = round_trip && d[c] == (c == lv ? 1.0 : 0.0);
  }
  bool valid = true;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const auto d = binary_decode(i / 100.0, j / 100.0);
      double s = 0.0;
      for (double v : d) {
        valid = valid && std::isfinite(v) && v >= 0.0 && v <= 1.0;
        s += v;
      }
      valid = valid && std::abs(s - 1.0) < 1e-12;
    }
  }
  return {worst < 1e-10 && round_trip && valid,
          fmt("soften max err %.2e, round-trip %s, grid %s", worst,
              round_trip ? "ok" : "bad", valid ? "ok" : "bad")};
}

Outcome attention_properties() {
  Rng rng(11);
  double worst_closed = 0.0, worst_residual = 0.0;
  bool signs = true;
  for (int d = 2; d <= 64; ++d) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.uniform(-3.0, 3.0);
    Eigen::MatrixXd w(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd s;
    const Eigen::VectorXd out = aspect_attention(x, w, &s);
    worst_residual = std::max(worst_residual, (out - x - x.cwiseProduct(s)).cwiseAbs().maxCoeff());
    for (int i = 0; i < d; ++i) signs = signs && (out[i] > 0) == (x[i] > 0) && (out[i] < 0) == (x[i] < 0);
    const Eigen::VectorXd zero = aspect_attention(x, Eigen::MatrixXd::Zero(d, d));
    worst_closed = std::max(worst_closed, (zero - x * (1.0 + 1.0 / d)).cwiseAbs().maxCoeff());
  }
  return {worst_closed < 1e-9 && worst_residual < 1e-9 && signs,
          fmt("W=0 max err %.2e, residual max err %.2e, signs %s", worst_closed,
              worst_residual, signs ? "ok" : "bad")};
}

Outcome gradient_checks() {
  double worst = 0.0;
  int checks = 0;
  for (OrdinalStrategy s : kAllStrategies) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto r = gradcheck::check(gradcheck::make_problem(s, seed));
      worst = std::max(worst, r.max_relative);
      ++checks;
    }
  }
  return {worst < 1e-4, fmt("%d checks, max relative error %.2e", checks, worst)};
}

// Synthetic setup shared by the learnability and saliency checks.
struct Learnable {
  Corpus corpus;
  EmbeddingCache cache;
  TrainConfig config;
};

Learnable learnable_setup() {
  SyntheticCorpusConfig cc;
  cc.n_items = 300;
  cc.seed = 7;
  Corpus corpus = synthetic_corpus(cc);
  SyntheticConfig sc;
  sc.seed = 3;
  sc.d_sem = 12;
  sc.d_emo = 2;
  sc.markers = default_markers(4.0, 8.0);
  EmbeddingCache cache = synthetic_provider(corpus, sc);
  Learnable l{std::move(corpus), std::move(cache), {}};
  l.config.max_epochs = 50;
  l.config.patience = 15;
  l.config.batch_size = 10;
  l.config.lr = 1e-3;
  l.config.backbone.hidden = 64;
  return l;
}

Outcome learnability() {
  Learnable l = learnable_setup();
  Outcome o{true, ""};
  double plain_ratio = 0.0;
  for (OrdinalStrategy s : kAllStrategies) {
    l.config.strategy = s;
    const EvalReport r = run_cv(l.corpus, l.cache, l.config);
    o.detail += fmt("%s %.4f/%.3f ", std::string(strategy_name(s)).c_str(), r.average,
                    r.two_level_error_ratio);
    o.pass = o.pass && r.average >= 0.95;
    if (s == OrdinalStrategy::Plain) {
      plain_ratio = r.two_level_error_ratio;
    } else {
      o.pass = o.pass && r.two_level_error_ratio <= plain_ratio;
    }
  }
  return o;
}

Outcome saliency() {
  Learnable l = learnable_setup();
  const FoldPlan plan = make_folds(l.corpus, l.config.n_folds, l.config.fold_seed);
  const auto examples = make_examples(l.corpus, l.cache, l.config);
  std::size_t hits = 0, total = 0;
  for (int fold = 0; fold < plan.n_folds; ++fold) {
    const FoldSplit split = split_fold(plan, l.corpus, fold);
    std::vector<Example> train, dev;
    for (auto i : split.train) train.push_back(examples[i]);
    for (auto i : split.dev) dev.push_back(examples[i]);
    const auto out = train_model(train, dev, l.config, derive_seed(0, 100 + fold));
    for (auto i : split.test) {
      std::vector<Aspect> marked;
      for (Aspect a : kAllAspects)
        if (marker_sentence(l.corpus[i], a)) marked.push_back(a);
      if (marked.empty()) continue;
      const PerturbationReport rep = perturb_sentences(out.model, examples[i].sentences, {}, marked);
      for (Aspect a : marked) {
        ++total;
        hits += most_salient(rep, a) == *marker_sentence(l.corpus[i], a);
      }
    }
  }
  const double rate = total ? static_cast<double>(hits) / total : 0.0;
  return {total > 0 && rate >= 0.9,
          fmt("marker top-1 on %zu/%zu marked (item, aspect) pairs = %.1f%%", hits, total,
              100.0 * rate)};
}

double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<long double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      long double less = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        less += v[j] < v[i];
        equal += v[j] == v[i];
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

Outcome statistics() {
  Rng rng(5);
  double worst = 0.0;
  int compared = 0;
  while (compared < 1000) {
    const std::size_t n = 3 + rng.below(10);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(4));
      y[i] = static_cast<double>(rng.below(5));
    }
    if (std::set<double>(x.begin(), x.end()).size() < 2 ||
        std::set<double>(y.begin(), y.end()).size() < 2)
      continue;
    worst = std::max(worst, std::abs(spearman_rho(x, y) - brute_spearman(x, y)));
    ++compared;
  }
  const std::vector<double> v{0.61, 0.58, 0.64, 0.60, 0.59};
  const TTestResult t = paired_ttest(v, v);
  return {worst < 1e-12 && t.t == 0.0 && t.p == 1.0,
          fmt("%d tied vectors, max |diff| %.2e, paired_ttest(x, x) = (%g, %g)", compared, worst,
              t.t, t.p)};
}

Outcome determinism() {
  SyntheticCorpusConfig cc;
  cc.n_items = 60;
  cc.seed = 4;
  const Corpus c = synthetic_corpus(cc);
  SyntheticConfig sc;
  sc.d_sem = 12;
  sc.d_emo = 2;
  sc.markers = default_markers(4.0, 8.0);
  const EmbeddingCache cache = synthetic_provider(c, sc);
  bool same = true;
  for (OrdinalStrategy s : kAllStrategies) {
    TrainConfig t;
    t.strategy = s;
    t.n_folds = 3;
    t.max_epochs = 3;
    t.batch_size = 8;
    t.seeds = {0, 1};
    t.backbone.hidden = 8;
    same = same && run_cv(c, cache, t).payload().dump() == run_cv(c, cache, t).payload().dump();
  }
  BaselineConfig b;
  b.n_folds = 3;
  b.kind = BaselineKind::Tfidf;
  same = same && run_baseline_cv(c, b).payload().dump() == run_baseline_cv(c, b).payload().dump();
  return {same, same ? "payloads byte-identical for 4 strategies and tf-idf"
                     : "payloads differ between repeated runs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"majority-voting cross-check", majority_cross_check},
      {"ordinal encoders", ordinal_encoders},
      {"aspect attention properties", attention_properties},
      {"gradient correctness", gradient_checks},
      {"learnability", learnability},
      {"saliency", saliency},
      {"statistics", statistics},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), s);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
