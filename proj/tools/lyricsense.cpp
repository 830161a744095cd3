#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lyricsense/analysis.hpp"
#include "lyricsense/digest.hpp"
#include "lyricsense/error.hpp"
#include "lyricsense/harness.hpp"
#include "lyricsense/random.hpp"
#include "lyricsense/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace lyricsense;

namespace {

struct Common {
  std::string manifest;
  std::string lyrics_root;
  std::string cache;
  std::string config;
  std::string out;
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
};

// Exit code for refusals that are not malformed input (digest mismatch).
constexpr int kRefused = 3;

class DigestMismatch : public Error {
 public:
  using Error::Error;
};

fs::path out_dir(const Common& c) {
  fs::path dir = c.out;
  if (dir.empty()) {
    const char* env = std::getenv("LYRICSENSE_OUT_DIR");
    dir = env && *env ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InputError(std::string(flag) + " is required");
}

Corpus load_corpus(const Common& c) {
  require(c.manifest, "--manifest");
  const fs::path root = c.lyrics_root.empty() ? fs::path(c.manifest).parent_path() : fs::path(c.lyrics_root);
  return load_manifest(c.manifest, root);
}

EmbeddingCache load_cache(const Common& c) {
  require(c.cache, "--cache");
  return open_cache(c.cache);
}

std::string corpus_digest(const Corpus& corpus) { return sha256_hex(corpus_to_json(corpus).dump()); }

// Defaults, then the config file, then command-line flags.
TrainConfig resolve_config(const Common& c) {
  json j = TrainConfig{}.to_json();
  if (!c.config.empty()) {
    const json file = read_json(c.config);
    j.merge_patch(file.contains("train") ? file["train"] : file);
  }
  if (c.strategy) j["strategy"] = *c.strategy;
  if (c.seed) j["seeds"] = json::array({*c.seed});
  if (c.folds) j["n_folds"] = *c.folds;
  if (c.epochs) j["max_epochs"] = *c.epochs;
  if (c.batch_size) j["batch_size"] = *c.batch_size;
  if (c.lr) j["lr"] = *c.lr;
  TrainConfig t;
  try {
    t = TrainConfig::from_json(j);
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid configuration: ") + e.what());
  }
  t.validate();
  return t;
}

void write_run_manifest(const fs::path& dir, const std::string& command, const json& config,
                        const Corpus* corpus, const EmbeddingCache* cache) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["corpus_digest"] = corpus ? json(corpus_digest(*corpus)) : json(nullptr);
  m["cache_digest"] = cache ? json(cache->content_digest()) : json(nullptr);
  m["cache_signature"] = cache ? json(cache->signature_digest()) : json(nullptr);
  m["version"] = LYRICSENSE_VERSION;
  m["timestamp"] = utc_timestamp();
  write_json(dir / "run_manifest.json", m);
}

std::vector<std::string> flat_sentences(const MusicItem& item) {
  std::vector<std::string> out;
  for (const auto& song : item.songs) out.insert(out.end(), song.sentences.begin(), song.sentences.end());
  return out;
}

// Loads the checkpoint and refuses caches built by a different provider.
LoadedCheckpoint load_compatible(const std::string& path, const EmbeddingCache& cache) {
  require(path, "--checkpoint");
  LoadedCheckpoint ck = load_checkpoint(path);
  const std::string expected = ck.meta.value("cache_signature", "");
  if (expected != cache.signature_digest()) {
    throw DigestMismatch("cache signature " + cache.signature_digest() +
                         " does not match checkpoint cache signature " +
                         (expected.empty() ? std::string("(none)") : expected));
  }
  return ck;
}

TrainConfig checkpoint_config(const LoadedCheckpoint& ck) {
  return TrainConfig::from_json(ck.meta.at("config"));
}

int cmd_synth_corpus(const Common& c, const SyntheticCorpusConfig& sc, std::size_t low_items) {
  Corpus corpus = synthetic_corpus(sc);
  for (std::size_t i = 0; i < low_items; ++i) {
    corpus.push_back(synthetic_low_item("low" + std::to_string(i), 6, derive_seed(sc.seed, 1000 + i)));
  }
  const fs::path dir = out_dir(c);
  write_manifest(corpus, dir / "manifest.jsonl", dir);
  json cfg = {{"n_items", sc.n_items},
              {"seed", sc.seed},
              {"low_items", low_items},
              {"anti_monotone_positive", sc.anti_monotone_positive}};
  write_run_manifest(dir, "synth-corpus", cfg, &corpus, nullptr);
  std::cout << "wrote " << corpus.size() << " items to " << (dir / "manifest.jsonl").string() << "\n";
  return 0;
}

int cmd_synth_cache(const Common& c, SyntheticConfig sc, double medium, double high) {
  const Corpus corpus = load_corpus(c);
  sc.markers = default_markers(medium, high);
  const EmbeddingCache cache = synthetic_provider(corpus, sc);
  const fs::path dir = out_dir(c);
  write_cache(cache, dir / "cache.ordr");
  json cfg = {{"d_sem", sc.d_sem}, {"d_emo", sc.d_emo}, {"seed", sc.seed},
              {"block_width", sc.block_width}, {"medium_offset", medium}, {"high_offset", high}};
  write_run_manifest(dir, "synth-cache", cfg, &corpus, &cache);
  std::cout << "wrote " << cache.size() << " sentence embeddings to "
            << (dir / "cache.ordr").string() << "\n";
  return 0;
}

int cmd_build_corpus(const Common& c) {
  const Corpus corpus = load_corpus(c);
  json stats;
  json kinds;
  for (const auto& [k, frac] : kind_distribution(corpus)) kinds[k] = 100.0 * frac;
  stats["items"] = corpus.size();
  stats["kind_percent"] = kinds;
  std::size_t songs = 0;
  for (const auto& it : corpus) songs += it.songs.size();
  stats["songs"] = songs;
  for (Aspect a : kAllAspects) {
    json d;
    for (const auto& [lv, n] : label_distribution(corpus, a)) d[std::string(level_name(lv))] = n;
    stats["levels"][std::string(aspect_key(a))] = d;
  }
  const fs::path dir = out_dir(c);
  write_json(dir / "corpus.json", corpus_to_json(corpus));
  write_json(dir / "corpus_stats.json", stats);
  write_run_manifest(dir, "build-corpus", {{"manifest", c.manifest}}, &corpus, nullptr);
  std::cout << stats.dump(2) << "\n";
  return 0;
}

int cmd_train(const Common& c) {
  const TrainConfig cfg = resolve_config(c);
  const Corpus corpus = load_corpus(c);
  const EmbeddingCache cache = load_cache(c);
  cache.validate_coverage(corpus);
  const auto examples = make_examples(corpus, cache, cfg);
  const FoldPlan plan = make_folds(corpus, cfg.n_folds, cfg.fold_seed);
  const FoldSplit split = split_fold(plan, corpus, 0);
  std::vector<Example> train, dev;
  for (auto i : split.dev) dev.push_back(examples[i]);
  for (auto i : split.train) train.push_back(examples[i]);
  for (auto i : split.test) train.push_back(examples[i]);

  const auto out = train_model(train, dev, cfg, cfg.seeds.front());
  json resolved = cfg.to_json();
  resolved["backbone"] = out.model.params.config.to_json();

  json log;
  log["strategy"] = strategy_name(cfg.strategy);
  log["best_epoch"] = out.best_epoch;
  log["epoch"] = json::array();
  log["loss_cls"] = json::array();
  log["dev_macro_f1"] = json::array();
  log["skipped_steps"] = json::array();
  if (cfg.strategy == OrdinalStrategy::RankingClassification) log["loss_rank"] = json::array();
  for (const auto& e : out.log) {
    log["epoch"].push_back(e.epoch);
    log["loss_cls"].push_back(e.loss_cls);
    log["dev_macro_f1"].push_back(e.dev_macro_f1 ? json(*e.dev_macro_f1) : json(nullptr));
    log["skipped_steps"].push_back(e.skipped_steps);
    if (e.loss_rank) log["loss_rank"].push_back(*e.loss_rank);
  }

  const fs::path dir = out_dir(c);
  json meta = {{"config", resolved},
               {"cache_signature", cache.signature_digest()},
               {"cache_digest", cache.content_digest()},
               {"corpus_digest", corpus_digest(corpus)},
               {"version", LYRICSENSE_VERSION}};
  save_checkpoint(dir / "model.ckpt", out.model, meta);
  write_json(dir / "train_log.json", log);
  write_run_manifest(dir, "train", resolved, &corpus, &cache);
  std::cout << "trained " << strategy_name(cfg.strategy) << " for " << out.log.size()
            << " epochs (best " << out.best_epoch << "), checkpoint "
            << (dir / "model.ckpt").string() << "\n";
  return 0;
}

std::vector<double> report_fold_averages(const json& report) {
  const json& payload = report.contains("payload") ? report["payload"] : report;
  std::vector<double> out;
  for (const auto& f : payload.at("folds")) out.push_back(f.at("average_macro_f1").get<double>());
  return out;
}

int cmd_evaluate(const Common& c, const std::string& baseline, const std::string& word_vectors,
                 const std::string& compare_with) {
  const Corpus corpus = load_corpus(c);
  EvalReport report;
  std::optional<EmbeddingCache> cache;
  json resolved;
  std::optional<WordVectors> wv;
  if (baseline.empty()) {
    const TrainConfig cfg = resolve_config(c);
    cache.emplace(load_cache(c));
    report = run_cv(corpus, *cache, cfg);
    resolved = report.config;
  } else {
    BaselineConfig b;
    if (baseline == "majority") {
      b.kind = BaselineKind::Majority;
    } else if (baseline == "tfidf") {
      b.kind = BaselineKind::Tfidf;
    } else if (baseline == "bowv") {
      b.kind = BaselineKind::WordVectors;
      require(word_vectors, "--word-vectors");
      wv.emplace(load_word_vectors(word_vectors));
      b.word_vectors = &*wv;
    } else {
      throw InputError("unknown baseline '" + baseline + "' (expected majority, tfidf, bowv)");
    }
    if (c.folds) b.n_folds = *c.folds;
    if (c.epochs) b.linear.epochs = *c.epochs;
    if (c.lr) b.linear.lr = *c.lr;
    report = run_baseline_cv(corpus, b);
    resolved = report.config;
  }

  const fs::path dir = out_dir(c);
  json out = report.to_json();
  if (!compare_with.empty()) {
    const auto mine = report.fold_averages();
    const auto theirs = report_fold_averages(read_json(compare_with));
    if (mine.size() != theirs.size())
      throw InputError("cannot compare: " + std::to_string(mine.size()) + " vs " +
                       std::to_string(theirs.size()) + " fold results");
    const TTestResult t = paired_ttest(mine, theirs);
    out["comparison"] = {{"against", compare_with}, {"t", t.t}, {"p", t.p}};
  }
  write_json(dir / "report.json", out);
  write_text(dir / "confusion.csv", report.confusion_csv());
  write_run_manifest(dir, "evaluate", resolved, &corpus, cache ? &*cache : nullptr);
  std::cout << report.method << " average macro-F1 " << report.average << "\n";
  for (Aspect a : kAllAspects)
    std::cout << "  " << aspect_key(a) << " " << report.per_aspect_mean[index(a)] << "\n";
  if (out.contains("comparison"))
    std::cout << "paired t = " << out["comparison"]["t"] << ", p = " << out["comparison"]["p"] << "\n";
  return 0;
}

int cmd_predict(const Common& c, const std::string& checkpoint) {
  const Corpus corpus = load_corpus(c);
  const EmbeddingCache cache = load_cache(c);
  const LoadedCheckpoint ck = load_compatible(checkpoint, cache);
  const TrainConfig cfg = checkpoint_config(ck);
  json items = json::array();
  for (const auto& item : corpus) {
    const auto p = ck.model.predict(cache.item_matrix(item, cfg.normalize_halves, cfg.use_emotion));
    json levels, probs;
    for (Aspect a : kAllAspects) {
      const auto k = std::string(aspect_key(a));
      levels[k] = level_name(p.levels[index(a)]);
      probs[k] = p.probabilities[index(a)];
    }
    items.push_back({{"item_id", item.item_id}, {"levels", levels}, {"probabilities", probs}});
  }
  const fs::path dir = out_dir(c);
  write_json(dir / "predictions.json", {{"checkpoint", checkpoint}, {"items", items}});
  write_run_manifest(dir, "predict", ck.meta.at("config"), &corpus, &cache);
  std::cout << items.dump(2) << "\n";
  return 0;
}

int cmd_perturb(const Common& c, const std::string& checkpoint, const std::string& item_id) {
  const Corpus corpus = load_corpus(c);
  const EmbeddingCache cache = load_cache(c);
  const LoadedCheckpoint ck = load_compatible(checkpoint, cache);
  const TrainConfig cfg = checkpoint_config(ck);
  require(item_id, "--item");
  const MusicItem* item = nullptr;
  for (const auto& it : corpus)
    if (it.item_id == item_id) item = &it;
  if (!item) throw InputError("item '" + item_id + "' is not in the manifest");
  const auto texts = flat_sentences(*item);
  PerturbationReport r =
      perturb_sentences(ck.model, cache.item_matrix(*item, cfg.normalize_halves, cfg.use_emotion), texts);
  r.item_id = item_id;
  const fs::path dir = out_dir(c);
  write_json(dir / "perturbation.json", r.to_json());
  write_run_manifest(dir, "perturb", ck.meta.at("config"), &corpus, &cache);
  std::cout << r.to_table();
  return 0;
}

int cmd_correlate(const Common& c, std::size_t permutations) {
  const Corpus corpus = load_corpus(c);
  const std::uint64_t seed = c.seed.value_or(0);
  const CorrelationMatrix m = correlation_matrix(corpus, permutations, seed);
  const fs::path dir = out_dir(c);
  write_json(dir / "correlation.json", m.to_json());
  write_run_manifest(dir, "correlate", {{"permutations", permutations}, {"seed", seed}}, &corpus,
                     nullptr);
  std::cout << m.to_json().dump(2) << "\n";
  return 0;
}

void add_corpus_flags(CLI::App* app, Common& c) {
  app->add_option("--manifest", c.manifest, "JSONL manifest of rated items");
  app->add_option("--lyrics-root", c.lyrics_root, "Directory the manifest's song paths are relative to");
}

void add_out_flag(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output directory (default $LYRICSENSE_OUT_DIR or .)");
}

void add_train_flags(CLI::App* app, Common& c) {
  app->add_option("--cache", c.cache, "Sentence embedding cache");
  app->add_option("--config", c.config, "JSON training configuration");
  app->add_option("--strategy", c.strategy, "plain, soft, binary or rank");
  app->add_option("--seed", c.seed, "Training seed");
  app->add_option("--folds", c.folds, "Number of cross-validation folds");
  app->add_option("--epochs", c.epochs, "Maximum epochs");
  app->add_option("--batch-size", c.batch_size, "Mini-batch size");
  app->add_option("--lr", c.lr, "Learning rate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ordinal multi-aspect lyrics content assessment"};
  app.set_version_flag("--version", std::string(LYRICSENSE_VERSION));
  app.require_subcommand(1);
  Common c;

  SyntheticCorpusConfig scc;
  std::size_t low_items = 0;
  auto* synth_corpus = app.add_subcommand("synth-corpus", "Write a synthetic marker corpus");
  add_out_flag(synth_corpus, c);
  synth_corpus->add_option("--n-items", scc.n_items, "Number of rated items");
  synth_corpus->add_option("--seed", scc.seed, "Corpus seed");
  synth_corpus->add_option("--low-items", low_items, "Extra marker-free all-Low items");
  synth_corpus->add_flag("--anti-monotone", scc.anti_monotone_positive,
                         "Set Positive to the mirror of Violence");

  SyntheticConfig sc;
  sc.d_sem = 12;
  sc.d_emo = 2;
  double medium_offset = 4.0, high_offset = 8.0;
  auto* synth_cache = app.add_subcommand("synth-cache", "Write a synthetic embedding cache");
  add_corpus_flags(synth_cache, c);
  add_out_flag(synth_cache, c);
  synth_cache->add_option("--seed", sc.seed, "Embedding seed");
  synth_cache->add_option("--d-sem", sc.d_sem, "Semantic dimension");
  synth_cache->add_option("--d-emo", sc.d_emo, "Emotion dimension");
  synth_cache->add_option("--medium-offset", medium_offset, "Marker offset for Medium tokens");
  synth_cache->add_option("--high-offset", high_offset, "Marker offset for High tokens");

  auto* build = app.add_subcommand("build-corpus", "Validate a manifest and summarize it");
  add_corpus_flags(build, c);
  add_out_flag(build, c);

  auto* train = app.add_subcommand("train", "Train one model on the whole corpus");
  add_corpus_flags(train, c);
  add_out_flag(train, c);
  add_train_flags(train, c);

  std::string baseline, word_vectors, compare_with;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated evaluation");
  add_corpus_flags(evaluate, c);
  add_out_flag(evaluate, c);
  add_train_flags(evaluate, c);
  evaluate->add_option("--baseline", baseline, "majority, tfidf or bowv instead of the neural model");
  evaluate->add_option("--word-vectors", word_vectors, "Text word-vector file for bowv");
  evaluate->add_option("--compare-with", compare_with, "Earlier report.json for a paired t-test");

  std::string checkpoint, item_id;
  auto* predict = app.add_subcommand("predict", "Predict five-aspect levels");
  add_corpus_flags(predict, c);
  add_out_flag(predict, c);
  predict->add_option("--cache", c.cache, "Sentence embedding cache");
  predict->add_option("--checkpoint", checkpoint, "Model checkpoint");

  auto* perturb = app.add_subcommand("perturb", "Leave-one-sentence-out saliency for one item");
  add_corpus_flags(perturb, c);
  add_out_flag(perturb, c);
  perturb->add_option("--cache", c.cache, "Sentence embedding cache");
  perturb->add_option("--checkpoint", checkpoint, "Model checkpoint");
  perturb->add_option("--item", item_id, "Item id");

  std::size_t permutations = 0;
  auto* correlate = app.add_subcommand("correlate", "Spearman correlation between aspects");
  add_corpus_flags(correlate, c);
  add_out_flag(correlate, c);
  correlate->add_option("--permutations", permutations, "Permutation count (0 uses the t approximation)");
  correlate->add_option("--seed", c.seed, "Permutation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_corpus) return cmd_synth_corpus(c, scc, low_items);
    if (*synth_cache) return cmd_synth_cache(c, sc, medium_offset, high_offset);
    if (*build) return cmd_build_corpus(c);
    if (*train) return cmd_train(c);
    if (*evaluate) return cmd_evaluate(c, baseline, word_vectors, compare_with);
    if (*predict) return cmd_predict(c, checkpoint);
    if (*perturb) return cmd_perturb(c, checkpoint, item_id);
    if (*correlate) return cmd_correlate(c, permutations);
  } catch (const DigestMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRefused;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
