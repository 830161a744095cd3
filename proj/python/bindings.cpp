#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lyricsense/analysis.hpp"
#include "lyricsense/error.hpp"
#include "lyricsense/harness.hpp"
#include "lyricsense/synthetic.hpp"

namespace py = pybind11;
using namespace lyricsense;
using nlohmann::json;

namespace {

std::vector<int> level_codes(const Levels& levels) {
  std::vector<int> out;
  for (auto l : levels) out.push_back(code(l));
  return out;
}

std::vector<SeverityLevel> to_levels(const std::vector<int>& codes) {
  std::vector<SeverityLevel> out;
  for (int c : codes) {
    if (c < 0 || c > 2) throw InputError("level code " + std::to_string(c) + " outside 0..2");
    out.push_back(level_from_code(c));
  }
  return out;
}

Confusion to_confusion(const std::array<std::array<std::uint64_t, 3>, 3>& m) { return m; }

TrainConfig train_config(const std::string& config_json) {
  json j = TrainConfig{}.to_json();
  j.merge_patch(json::parse(config_json));
  TrainConfig t = TrainConfig::from_json(j);
  t.validate();
  return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ordinal multi-aspect lyrics content assessment";
  m.attr("__version__") = LYRICSENSE_VERSION;

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  m.attr("ASPECTS") = [] {
    std::vector<std::string> out;
    for (Aspect a : kAllAspects) out.emplace_back(aspect_key(a));
    return out;
  }();

  m.def("project_rating", [](int score) { return code(project_rating(score)); },
        py::arg("score"), "Level code (0 Low, 1 Medium, 2 High) for a 0..5 rating.");

  py::class_<Song>(m, "Song")
      .def_readonly("song_id", &Song::song_id)
      .def_readonly("sentences", &Song::sentences);

  py::class_<MusicItem>(m, "MusicItem")
      .def_readonly("item_id", &MusicItem::item_id)
      .def_readonly("title", &MusicItem::title)
      .def_readonly("songs", &MusicItem::songs)
      .def_property_readonly("kind", [](const MusicItem& it) { return std::string(kind_key(it.kind)); })
      .def_property_readonly("levels", [](const MusicItem& it) { return level_codes(it.ratings.projected); })
      .def_property_readonly("raw_scores", [](const MusicItem& it) { return it.ratings.raw; })
      .def("sentence_count", &MusicItem::sentence_count);

  m.def("load_manifest", &load_manifest, py::arg("manifest"), py::arg("lyrics_root"));
  m.def("write_manifest",
        [](const std::vector<MusicItem>& items, const std::filesystem::path& manifest,
           const std::filesystem::path& root) { write_manifest(items, manifest, root); },
        py::arg("items"), py::arg("manifest"), py::arg("lyrics_root"));
  m.def("synthetic_corpus",
        [](std::size_t n_items, std::uint64_t seed, bool anti_monotone_positive) {
          SyntheticCorpusConfig c;
          c.n_items = n_items;
          c.seed = seed;
          c.anti_monotone_positive = anti_monotone_positive;
          return synthetic_corpus(c);
        },
        py::arg("n_items") = 300, py::arg("seed") = 0, py::arg("anti_monotone_positive") = false);
  m.def("synthetic_low_item", &synthetic_low_item, py::arg("item_id"), py::arg("n_sentences"),
        py::arg("seed") = 0);
  m.def("marker_sentence",
        [](const MusicItem& item, const std::string& aspect) {
          const auto a = parse_aspect(aspect);
          if (!a) throw InputError("unknown aspect '" + aspect + "'");
          return marker_sentence(item, *a);
        },
        py::arg("item"), py::arg("aspect"));

  py::class_<EmbeddingCache>(m, "EmbeddingCache")
      .def_property_readonly("d_sem", &EmbeddingCache::d_sem)
      .def_property_readonly("d_emo", &EmbeddingCache::d_emo)
      .def_property_readonly("dim", &EmbeddingCache::dim)
      .def_property_readonly("provider_tag", &EmbeddingCache::provider_tag)
      .def("__len__", &EmbeddingCache::size)
      .def("content_digest", &EmbeddingCache::content_digest)
      .def("signature_digest", &EmbeddingCache::signature_digest)
      .def("validate_coverage",
           [](const EmbeddingCache& c, const std::vector<MusicItem>& items) { c.validate_coverage(items); })
      .def("item_matrix", &EmbeddingCache::item_matrix, py::arg("item"),
           py::arg("normalize_halves") = false, py::arg("use_emotion") = true)
      .def("write", [](const EmbeddingCache& c, const std::filesystem::path& p) { write_cache(c, p); });
  m.def("open_cache", py::overload_cast<const std::filesystem::path&>(&open_cache), py::arg("path"));
  m.def("synthetic_cache",
        [](const std::vector<MusicItem>& items, std::uint32_t d_sem, std::uint32_t d_emo,
           std::uint64_t seed, double medium_offset, double high_offset) {
          SyntheticConfig c;
          c.d_sem = d_sem;
          c.d_emo = d_emo;
          c.seed = seed;
          c.markers = default_markers(medium_offset, high_offset);
          return synthetic_provider(items, c);
        },
        py::arg("items"), py::arg("d_sem") = 12, py::arg("d_emo") = 2, py::arg("seed") = 0,
        py::arg("medium_offset") = 4.0, py::arg("high_offset") = 8.0);

  m.def("soften_label", &soften_label, py::arg("y"), py::arg("k"));
  m.def("binary_targets", [](int y) { return binary_targets(level_from_code(y)); }, py::arg("level"));
  m.def("binary_decode", &binary_decode, py::arg("p1"), py::arg("p2"));
  m.def("aspect_attention",
        [](const Eigen::VectorXd& x, const Eigen::MatrixXd& w) { return aspect_attention(x, w); },
        py::arg("x"), py::arg("w"));

  m.def("confusion_matrix",
        [](const std::vector<int>& truth, const std::vector<int>& pred) {
          const auto t = to_levels(truth), p = to_levels(pred);
          return confusion_matrix(t, p);
        },
        py::arg("truth"), py::arg("pred"));
  m.def("macro_f1", [](const std::array<std::array<std::uint64_t, 3>, 3>& c) { return macro_f1(to_confusion(c)); },
        py::arg("confusion"));
  m.def("spearman_rho",
        [](const std::vector<double>& x, const std::vector<double>& y) { return spearman_rho(x, y); });
  m.def("spearman_p_value", &spearman_p_value, py::arg("rho"), py::arg("n"));
  m.def("paired_ttest",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          const auto r = paired_ttest(a, b);
          return std::pair(r.t, r.p);
        },
        py::arg("a"), py::arg("b"));

  py::class_<Model>(m, "Model")
      .def_property_readonly("strategy", [](const Model& md) { return std::string(strategy_name(md.strategy)); })
      .def("predict",
           [](const Model& md, const Eigen::MatrixXd& x) {
             const auto p = md.predict(x);
             std::vector<std::array<double, 3>> probs(p.probabilities.begin(), p.probabilities.end());
             return py::make_tuple(level_codes(p.levels), probs);
           },
           py::arg("sentences"), "Level codes and class probabilities per aspect.")
      .def("save",
           [](const Model& md, const std::filesystem::path& p, const std::string& meta) {
             save_checkpoint(p, md, json::parse(meta));
           },
           py::arg("path"), py::arg("meta_json") = "{}");
  m.def("load_checkpoint",
        [](const std::filesystem::path& p) {
          auto ck = load_checkpoint(p);
          return py::make_tuple(std::move(ck.model), ck.meta.dump());
        },
        py::arg("path"));

  m.def("train",
        [](const std::vector<MusicItem>& items, const EmbeddingCache& cache, const std::string& config,
           std::uint64_t seed) {
          const TrainConfig t = train_config(config);
          cache.validate_coverage(items);
          const auto ex = make_examples(items, cache, t);
          py::gil_scoped_release release;
          auto out = train_model(ex, {}, t, seed);
          json log = json::array();
          for (const auto& e : out.log) {
            json l = {{"epoch", e.epoch}, {"loss_cls", e.loss_cls}};
            if (e.loss_rank) l["loss_rank"] = *e.loss_rank;
            log.push_back(l);
          }
          return std::pair(std::move(out.model), log.dump());
        },
        py::arg("items"), py::arg("cache"), py::arg("config_json") = "{}", py::arg("seed") = 0);
  m.def("run_cv",
        [](const std::vector<MusicItem>& items, const EmbeddingCache& cache, const std::string& config) {
          const TrainConfig t = train_config(config);
          py::gil_scoped_release release;
          return run_cv(items, cache, t).to_json().dump();
        },
        py::arg("items"), py::arg("cache"), py::arg("config_json") = "{}");
  m.def("run_baseline_cv",
        [](const std::vector<MusicItem>& items, const std::string& kind, int folds) {
          BaselineConfig b;
          b.n_folds = folds;
          if (kind == "majority") {
            b.kind = BaselineKind::Majority;
          } else if (kind == "tfidf") {
            b.kind = BaselineKind::Tfidf;
          } else {
            throw InputError("unknown baseline '" + kind + "' (expected majority or tfidf)");
          }
          return run_baseline_cv(items, b).to_json().dump();
        },
        py::arg("items"), py::arg("kind") = "majority", py::arg("folds") = 10);

  m.def("correlation_matrix",
        [](const std::vector<MusicItem>& items, std::size_t permutations, std::uint64_t seed) {
          return correlation_matrix(items, permutations, seed).to_json().dump();
        },
        py::arg("items"), py::arg("permutations") = 0, py::arg("seed") = 0);
  m.def("perturb",
        [](const Model& md, const Eigen::MatrixXd& x, const std::vector<std::string>& texts) {
          return perturb_sentences(md, x, texts).to_json().dump();
        },
        py::arg("model"), py::arg("sentences"), py::arg("texts") = std::vector<std::string>{});
}
