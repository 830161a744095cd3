#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lyricsense/baselines.hpp"
#include "lyricsense/corpus.hpp"
#include "lyricsense/embedding_cache.hpp"
#include "lyricsense/featurize.hpp"
#include "lyricsense/metrics.hpp"
#include "lyricsense/model.hpp"
#include "lyricsense/stats.hpp"

namespace lyricsense {

struct TrainConfig {
  OrdinalStrategy strategy = OrdinalStrategy::Plain;
  std::size_t max_epochs = 200;
  // Epochs without a dev macro-F1 improvement before stopping.
  std::size_t patience = 10;
  std::size_t batch_size = 40;
  double lr = 1e-3;
  std::vector<std::uint64_t> seeds = {0};
  int n_folds = 10;
  std::uint64_t fold_seed = 0;
  // input_dim is filled from the cache; head shape from the strategy.
  BackboneConfig backbone;
  LossWeights weights;
  bool normalize_halves = false;
  bool use_emotion = true;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// One item ready for the backbone.
struct Example {
  std::string item_id;
  Eigen::MatrixXd sentences;
  Levels levels{};
};

std::vector<Example> make_examples(std::span<const MusicItem> items,
                                   const EmbeddingCache& cache,
                                   const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double loss_cls = 0.0;
  std::optional<double> loss_rank;
  std::optional<double> dev_macro_f1;
  std::size_t skipped_steps = 0;
};

struct TrainOutcome {
  Model model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

// Mini-batch Adam with early stopping on dev 5-aspect macro-F1; returns the
// best-on-dev parameters (final parameters when dev is empty).
TrainOutcome train_model(std::span<const Example> train,
                         std::span<const Example> dev,
                         const TrainConfig& config, std::uint64_t seed);

struct AspectEval {
  std::array<Confusion, kNumAspects> confusion{};
  std::array<double, kNumAspects> macro_f1{};
  double average = 0.0;
};

AspectEval evaluate_predictions(
    std::span<const Levels> truth, std::span<const Levels> predicted);
AspectEval evaluate_model(const Model& model, std::span<const Example> examples);

struct FoldResult {
  std::uint64_t seed = 0;
  int fold = 0;
  std::size_t n_train = 0, n_dev = 0, n_test = 0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  AspectEval eval;
};

struct EvalReport {
  std::string method;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  std::vector<FoldResult> folds;
  std::array<double, kNumAspects> per_aspect_mean{};
  double average = 0.0;
  // Pooled over all folds and seeds.
  std::array<ErrorSpan, kNumAspects> error_spans{};
  // Mean over aspects of two-level errors / all errors.
  double two_level_error_ratio = 0.0;
  double wall_clock_seconds = 0.0;

  // Fills the aggregate fields from `folds`.
  void aggregate();
  // Everything except wall-clock; stable across identical runs.
  nlohmann::json payload() const;
  nlohmann::json to_json() const;
  // seed,fold,aspect,true_level,pred_low,pred_medium,pred_high
  std::string confusion_csv() const;
  // Per (seed, fold) 5-aspect average macro-F1, in fold order.
  std::vector<double> fold_averages() const;
};

// Throws before any training when the cache does not cover the corpus.
EvalReport run_cv(std::span<const MusicItem> items, const EmbeddingCache& cache,
                  const TrainConfig& config);

enum class BaselineKind { Majority, Tfidf, WordVectors };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::Majority;
  int n_folds = 10;
  std::uint64_t fold_seed = 0;
  LinearTrainConfig linear;
  const WordVectors* word_vectors = nullptr;
};

// Same fold plan as run_cv; baselines train on train + dev of each fold.
EvalReport run_baseline_cv(std::span<const MusicItem> items,
                           const BaselineConfig& config);

// Paired t-test over matching (seed, fold) 5-aspect averages.
TTestResult compare_reports(const EvalReport& a, const EvalReport& b);

}  // namespace lyricsense
