#include "lyricsense/harness.hpp"

#include <chrono>
#include <set>
#include <sstream>

#include "lyricsense/error.hpp"
#include "lyricsense/optimizer.hpp"
#include "lyricsense/random.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace lyricsense {

void TrainConfig::validate() const {
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  if (strategy == OrdinalStrategy::RankingClassification && batch_size < 2)
    throw InputError("ranking strategy needs batch size of at least 2");
  if (max_epochs < 1) throw InputError("epochs must be at least 1");
  if (!(lr > 0.0)) throw InputError("learning rate must be positive");
  if (seeds.empty()) throw InputError("at least one seed is required");
  if (n_folds < 2) throw InputError("n_folds must be at least 2");
}

json TrainConfig::to_json() const {
  json bb = backbone.to_json();
  return {{"strategy", std::string(strategy_name(strategy))},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"batch_size", batch_size},
          {"lr", lr},
          {"seeds", seeds},
          {"n_folds", n_folds},
          {"fold_seed", fold_seed},
          {"backbone", bb},
          {"loss_weights", {{"cls", weights.cls}, {"rank", weights.rank}}},
          {"normalize_halves", normalize_halves},
          {"use_emotion", use_emotion}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.n_folds = j.at("n_folds").get<int>();
  c.fold_seed = j.at("fold_seed").get<std::uint64_t>();
  const auto& bb = j.at("backbone");
  c.backbone.input_dim = bb.value("input_dim", std::size_t{0});
  c.backbone.hidden = bb.at("hidden").get<std::size_t>();
  c.backbone.attention_dim = bb.value("attention_dim", std::size_t{0});
  c.backbone.pooling = parse_pooling(bb.at("pooling").get<std::string>());
  c.backbone.aspect_attention = bb.value("aspect_attention", true);
  c.weights.cls = j.at("loss_weights").at("cls").get<double>();
  c.weights.rank = j.at("loss_weights").at("rank").get<double>();
  c.normalize_halves = j.at("normalize_halves").get<bool>();
  c.use_emotion = j.at("use_emotion").get<bool>();
  return c;
}

std::vector<Example> make_examples(std::span<const MusicItem> items,
                                   const EmbeddingCache& cache,
                                   const TrainConfig& config) {
  std::vector<Example> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    Example e{item.item_id,
              cache.item_matrix(item, config.normalize_halves, config.use_emotion),
              {}};
    for (Aspect a : kAllAspects) e.levels[index(a)] = item.ratings.level(a);
    out.push_back(std::move(e));
  }
  return out;
}

AspectEval evaluate_predictions(std::span<const Levels> truth,
                                std::span<const Levels> predicted) {
  if (truth.size() != predicted.size())
    throw ShapeError("evaluate: truth and prediction counts differ");
  AspectEval ev;
  std::vector<SeverityLevel> t(truth.size()), p(truth.size());
  for (std::size_t a = 0; a < kNumAspects; ++a) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      t[i] = truth[i][a];
      p[i] = predicted[i][a];
    }
    ev.confusion[a] = confusion_matrix(t, p);
    ev.macro_f1[a] = macro_f1(ev.confusion[a]);
    ev.average += ev.macro_f1[a] / static_cast<double>(kNumAspects);
  }
  return ev;
}

AspectEval evaluate_model(const Model& model, std::span<const Example> examples) {
  std::vector<Levels> truth, pred;
  truth.reserve(examples.size());
  pred.reserve(examples.size());
  for (const auto& e : examples) {
    truth.push_back(e.levels);
    pred.push_back(model.predict(e.sentences).levels);
  }
  return evaluate_predictions(truth, pred);
}

namespace {

struct BatchResult {
  double loss_cls = 0.0;
  double loss_rank = 0.0;
};

BatchResult accumulate_plain(const Model& model, std::span<const Example* const> batch,
                             Gradients& grads) {
  BatchResult r;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Example* e : batch) {
    const DocForward f = forward(model.params, e->sentences);
    const ItemLoss l = item_loss(model.strategy, f.logits, e->levels);
    r.loss_cls += scale * l.loss;
    backward_into(model.params, f, l.dlogits, nullptr, grads, scale);
  }
  return r;
}

BatchResult accumulate_rank(const Model& model, std::span<const Example* const> batch,
                            std::uint64_t pair_seed, Gradients& grads) {
  std::vector<Levels> levels;
  std::vector<DocForward> fwd;
  levels.reserve(batch.size());
  fwd.reserve(batch.size());
  for (const Example* e : batch) {
    levels.push_back(e->levels);
    fwd.push_back(forward(model.params, e->sentences));
  }
  const auto pairs = sample_rank_pairs(levels, pair_seed);
  const double scale = 1.0 / static_cast<double>(pairs.size());

  const auto& c = model.params.config;
  std::vector<MatrixXd> dlogits(batch.size(),
                                MatrixXd::Zero(static_cast<Eigen::Index>(c.n_aspects),
                                               static_cast<Eigen::Index>(c.head_outputs)));
  std::vector<std::vector<VectorXd>> dx(
      batch.size(), std::vector<VectorXd>(
                        c.n_aspects, VectorXd::Zero(static_cast<Eigen::Index>(c.doc_dim()))));

  BatchResult r;
  for (const auto& p : pairs) {
    const PairLoss l = rank_cls_loss(model.params, fwd[p.a], fwd[p.b], levels[p.a],
                                     levels[p.b], p.labels, model.weights, &grads, scale);
    r.loss_cls += scale * l.loss_cls;
    r.loss_rank += scale * l.loss_rank;
    dlogits[p.a] += l.dlogits_a;
    dlogits[p.b] += l.dlogits_b;
    for (std::size_t a = 0; a < c.n_aspects; ++a) {
      dx[p.a][a] += l.dx_out_a[a];
      dx[p.b][a] += l.dx_out_b[a];
    }
  }
  for (std::size_t i = 0; i < batch.size(); ++i)
    backward_into(model.params, fwd[i], dlogits[i], &dx[i], grads, scale);
  return r;
}

double dev_score(const Model& model, std::span<const Example> dev) {
  return evaluate_model(model, dev).average;
}

}  // namespace

TrainOutcome train_model(std::span<const Example> train,
                         std::span<const Example> dev,
                         const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  if (train.empty()) throw InputError("train_model: empty training split");
  if (config.strategy == OrdinalStrategy::RankingClassification && train.size() < 2)
    throw InputError("ranking strategy needs at least 2 training items");

  BackboneConfig bb = config.backbone;
  bb.input_dim = static_cast<std::size_t>(train.front().sentences.rows());
  bb.seed = derive_seed(seed, 1);
  TrainOutcome out{Model::create(config.strategy, bb, config.weights), {}, 0};
  Model& model = out.model;

  Rng rng(derive_seed(seed, 2));
  std::vector<const Example*> order;
  order.reserve(train.size());
  for (const auto& e : train) order.push_back(&e);

  AdamState adam;
  AdamConfig adam_config;
  adam_config.lr = config.lr;
  Gradients grads = Gradients::zeros_like(model.params);

  const bool ranking = config.strategy == OrdinalStrategy::RankingClassification;
  std::vector<double> best = model.params.values;
  double best_score = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span(order));
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size)
      batches.emplace_back(b, std::min(order.size(), b + config.batch_size));
    // A trailing singleton cannot form a rank pair; fold it into its
    // predecessor.
    if (ranking && batches.size() > 1 &&
        batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    EpochLog log;
    log.epoch = epoch;
    double weight_sum = 0.0;
    double rank_sum = 0.0;
    for (const auto& [lo, hi] : batches) {
      std::span<const Example* const> batch(order.data() + lo, hi - lo);
      grads.set_zero();
      const BatchResult r = ranking ? accumulate_rank(model, batch, rng.next(), grads)
                                    : accumulate_plain(model, batch, grads);
      const double w = static_cast<double>(batch.size());
      log.loss_cls += w * r.loss_cls;
      rank_sum += w * r.loss_rank;
      weight_sum += w;
      if (sgd_step(model.params.values, grads.values, adam, adam_config) !=
          StepStatus::Applied)
        ++log.skipped_steps;
    }
    log.loss_cls /= weight_sum;
    if (ranking) log.loss_rank = rank_sum / weight_sum;

    if (!dev.empty()) {
      const double score = dev_score(model, dev);
      log.dev_macro_f1 = score;
      if (score > best_score) {
        best_score = score;
        best = model.params.values;
        out.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        out.log.push_back(log);
        break;
      }
    } else {
      out.best_epoch = epoch;
    }
    out.log.push_back(log);
  }
  if (!dev.empty()) model.params.values = std::move(best);
  return out;
}

void EvalReport::aggregate() {
  per_aspect_mean.fill(0.0);
  error_spans.fill(ErrorSpan{});
  average = 0.0;
  two_level_error_ratio = 0.0;
  if (folds.empty()) return;
  for (const auto& f : folds) {
    for (std::size_t a = 0; a < kNumAspects; ++a) {
      per_aspect_mean[a] += f.eval.macro_f1[a] / static_cast<double>(folds.size());
      const ErrorSpan e = error_span(f.eval.confusion[a]);
      error_spans[a].one_level += e.one_level;
      error_spans[a].two_level += e.two_level;
    }
  }
  for (std::size_t a = 0; a < kNumAspects; ++a) {
    average += per_aspect_mean[a] / static_cast<double>(kNumAspects);
    two_level_error_ratio +=
        error_spans[a].two_level_ratio() / static_cast<double>(kNumAspects);
  }
}

json EvalReport::payload() const {
  auto aspect_map = [](const std::array<double, kNumAspects>& v) {
    json j = json::object();
    for (Aspect a : kAllAspects) j[std::string(aspect_key(a))] = v[index(a)];
    return j;
  };
  json folds_j = json::array();
  for (const auto& f : folds) {
    json conf = json::object();
    for (Aspect a : kAllAspects) conf[std::string(aspect_key(a))] = f.eval.confusion[index(a)];
    folds_j.push_back({{"seed", f.seed},
                       {"fold", f.fold},
                       {"n_train", f.n_train},
                       {"n_dev", f.n_dev},
                       {"n_test", f.n_test},
                       {"best_epoch", f.best_epoch},
                       {"epochs_run", f.epochs_run},
                       {"macro_f1", aspect_map(f.eval.macro_f1)},
                       {"average_macro_f1", f.eval.average},
                       {"confusion", conf}});
  }
  json spans = json::object();
  for (Aspect a : kAllAspects) {
    const auto& e = error_spans[index(a)];
    spans[std::string(aspect_key(a))] = {{"one_level", e.one_level},
                                         {"two_level", e.two_level}};
  }
  return {{"method", method},
          {"config", config},
          {"seeds", seeds},
          {"folds", folds_j},
          {"per_aspect_mean_macro_f1", aspect_map(per_aspect_mean)},
          {"average_macro_f1", average},
          {"error_spans", spans},
          {"two_level_error_ratio", two_level_error_ratio}};
}

json EvalReport::to_json() const {
  return {{"payload", payload()}, {"wall_clock_seconds", wall_clock_seconds}};
}

std::string EvalReport::confusion_csv() const {
  std::ostringstream out;
  out << "seed,fold,aspect,true_level,pred_low,pred_medium,pred_high\n";
  for (const auto& f : folds) {
    for (Aspect a : kAllAspects) {
      const auto& m = f.eval.confusion[index(a)];
      for (int t = 0; t < kNumLevels; ++t) {
        out << f.seed << ',' << f.fold << ',' << aspect_key(a) << ','
            << level_name(level_from_code(t));
        for (int p = 0; p < kNumLevels; ++p)
          out << ',' << m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        out << '\n';
      }
    }
  }
  return out.str();
}

std::vector<double> EvalReport::fold_averages() const {
  std::vector<double> v;
  v.reserve(folds.size());
  for (const auto& f : folds) v.push_back(f.eval.average);
  return v;
}

namespace {

void assert_no_leak(std::span<const MusicItem> items, const FoldSplit& split) {
  std::set<std::string> held_out;
  for (auto i : split.test) held_out.insert(items[i].item_id);
  for (const auto* part : {&split.train, &split.dev}) {
    for (auto i : *part) {
      if (held_out.count(items[i].item_id))
        throw Error("fold leak: held-out item '" + items[i].item_id +
                    "' appears in its own fold's training data");
    }
  }
}

template <typename T>
std::vector<T> gather(std::span<const T> all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

EvalReport run_cv(std::span<const MusicItem> items, const EmbeddingCache& cache,
                  const TrainConfig& config) {
  config.validate();
  cache.validate_coverage(items);
  const auto started = std::chrono::steady_clock::now();

  const FoldPlan plan = make_folds(items, config.n_folds, config.fold_seed);
  const std::vector<Example> examples = make_examples(items, cache, config);

  EvalReport report;
  report.method = std::string(strategy_name(config.strategy));
  report.config = config.to_json();
  report.config["backbone"]["input_dim"] = examples.front().sentences.rows();
  report.config["fold_plan"] = {{"n_folds", plan.n_folds},
                                {"seed", plan.seed},
                                {"stratified_on", plan.stratified_on},
                                {"dev_fraction", plan.dev_fraction}};
  report.seeds = config.seeds;

  for (std::uint64_t seed : config.seeds) {
    for (int fold = 0; fold < plan.n_folds; ++fold) {
      const FoldSplit split = split_fold(plan, items, fold);
      assert_no_leak(items, split);
      const auto train = gather<Example>(examples, split.train);
      const auto dev = gather<Example>(examples, split.dev);
      const auto test = gather<Example>(examples, split.test);

      const auto fold_seed = derive_seed(seed, 100 + static_cast<std::uint64_t>(fold));
      const TrainOutcome t = train_model(train, dev, config, fold_seed);
      FoldResult r;
      r.seed = seed;
      r.fold = fold;
      r.n_train = train.size();
      r.n_dev = dev.size();
      r.n_test = test.size();
      r.best_epoch = t.best_epoch;
      r.epochs_run = t.log.size();
      r.eval = evaluate_model(t.model, test);
      report.folds.push_back(std::move(r));
    }
  }
  report.aggregate();
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

namespace {

std::string_view baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::Majority: return "majority";
    case BaselineKind::Tfidf: return "tfidf_linear";
    case BaselineKind::WordVectors: return "bowv_linear";
  }
  return "?";
}

}  // namespace

EvalReport run_baseline_cv(std::span<const MusicItem> items,
                           const BaselineConfig& config) {
  if (config.kind == BaselineKind::WordVectors && !config.word_vectors)
    throw InputError("word-vector baseline needs a word-vector table");
  const auto started = std::chrono::steady_clock::now();
  const FoldPlan plan = make_folds(items, config.n_folds, config.fold_seed);

  EvalReport report;
  report.method = std::string(baseline_name(config.kind));
  report.config = {{"method", report.method},
                   {"n_folds", config.n_folds},
                   {"fold_seed", config.fold_seed},
                   {"l2", config.linear.l2},
                   {"epochs", config.linear.epochs},
                   {"lr", config.linear.lr}};
  report.seeds = {config.linear.seed};

  for (int fold = 0; fold < plan.n_folds; ++fold) {
    const FoldSplit split = split_fold(plan, items, fold);
    assert_no_leak(items, split);
    std::vector<std::size_t> pool = split.train;
    pool.insert(pool.end(), split.dev.begin(), split.dev.end());
    std::sort(pool.begin(), pool.end());
    const auto train_items = gather<MusicItem>(items, pool);
    const auto test_items = gather<MusicItem>(items, split.test);

    MatrixXd train_x, test_x;
    if (config.kind == BaselineKind::Tfidf) {
      const TfidfFit fit = tfidf_fit_transform(std::span<const MusicItem>(train_items));
      train_x = to_dense(fit.rows, fit.model.dim());
      std::vector<SparseDoc> rows;
      for (const auto& it : test_items) rows.push_back(fit.model.transform(item_text(it)));
      test_x = to_dense(rows, fit.model.dim());
    } else if (config.kind == BaselineKind::WordVectors) {
      train_x = avg_wordvec(std::span<const MusicItem>(train_items), *config.word_vectors);
      test_x = avg_wordvec(std::span<const MusicItem>(test_items), *config.word_vectors);
    }

    std::vector<Levels> truth(test_items.size()), pred(test_items.size());
    for (std::size_t i = 0; i < test_items.size(); ++i)
      for (Aspect a : kAllAspects) truth[i][index(a)] = test_items[i].ratings.level(a);

    for (Aspect a : kAllAspects) {
      std::vector<SeverityLevel> labels;
      for (const auto& it : train_items) labels.push_back(it.ratings.level(a));
      std::vector<SeverityLevel> p;
      if (config.kind == BaselineKind::Majority) {
        p = majority_predict(labels, test_items.size());
      } else {
        p = linear_train(train_x, labels, config.linear).model.predict(test_x);
      }
      for (std::size_t i = 0; i < p.size(); ++i) pred[i][index(a)] = p[i];
    }

    FoldResult r;
    r.seed = config.linear.seed;
    r.fold = fold;
    r.n_train = pool.size();
    r.n_test = test_items.size();
    r.eval = evaluate_predictions(truth, pred);
    report.folds.push_back(std::move(r));
  }
  report.aggregate();
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

TTestResult compare_reports(const EvalReport& a, const EvalReport& b) {
  if (a.folds.size() != b.folds.size())
    throw InputError("reports have different fold counts");
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    if (a.folds[i].fold != b.folds[i].fold)
      throw InputError("reports list folds in different orders");
  }
  return paired_ttest(a.fold_averages(), b.fold_averages());
}

}  // namespace lyricsense
