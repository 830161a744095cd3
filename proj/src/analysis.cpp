#include "lyricsense/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "lyricsense/error.hpp"
#include "lyricsense/random.hpp"
#include "lyricsense/stats.hpp"

using nlohmann::json;

namespace lyricsense {

CorrelationMatrix correlation_matrix(std::span<const MusicItem> items,
                                     std::size_t permutations, std::uint64_t seed) {
  if (items.size() < 3) throw InputError("correlation needs at least 3 items");
  std::array<std::vector<double>, kNumAspects> scores;
  for (Aspect a : kAllAspects) {
    for (const auto& it : items)
      scores[index(a)].push_back(static_cast<double>(it.ratings.raw_score(a)));
  }
  CorrelationMatrix m;
  m.n = items.size();
  m.p_method = permutations > 0 ? "permutation" : "t-approximation";
  for (std::size_t i = 0; i < kNumAspects; ++i) {
    m.rho[i][i] = 1.0;
    m.p_value[i][i] = 0.0;
    for (std::size_t j = i + 1; j < kNumAspects; ++j) {
      const double r = spearman_rho(scores[i], scores[j]);
      const double p = permutations > 0
                           ? spearman_permutation_p_value(scores[i], scores[j], permutations,
                                                          derive_seed(seed, i * kNumAspects + j))
                           : spearman_p_value(r, items.size());
      m.rho[i][j] = m.rho[j][i] = r;
      m.p_value[i][j] = m.p_value[j][i] = p;
    }
  }
  return m;
}

json CorrelationMatrix::to_json() const {
  json aspects = json::array();
  for (Aspect a : kAllAspects) aspects.push_back(std::string(aspect_key(a)));
  return {{"n", n}, {"aspects", aspects}, {"rho", rho},
          {"p_value", p_value}, {"p_method", p_method}};
}

std::string_view transition_arrow(int transition) noexcept {
  switch (transition) {
    case -2: return "⇓";
    case -1: return "↓";
    case 1: return "↑";
    case 2: return "⇑";
    default: return "";
  }
}

PerturbationRecord compare_inputs(const Model& model, const Eigen::MatrixXd& full,
                                  const Eigen::MatrixXd& reduced) {
  const auto base = model.predict(full);
  const auto after = model.predict(reduced);
  PerturbationRecord r;
  for (std::size_t a = 0; a < kNumAspects; ++a) {
    const auto cls = static_cast<std::size_t>(code(base.levels[a]));
    r.delta[a] = 100.0 * (after.probabilities[a][cls] - base.probabilities[a][cls]);
    r.transition[a] = code(after.levels[a]) - code(base.levels[a]);
  }
  return r;
}

PerturbationReport perturb_sentences(const Model& model,
                                     const Eigen::MatrixXd& sentences,
                                     std::span<const std::string> texts,
                                     std::vector<Aspect> aspects) {
  const auto t = static_cast<std::size_t>(sentences.cols());
  if (t < 2)
    throw InputError("perturbation needs at least 2 sentences; removing the only one leaves no input");
  if (!texts.empty() && texts.size() != t)
    throw ShapeError("perturbation: " + std::to_string(texts.size()) + " texts for " +
                     std::to_string(t) + " sentences");

  PerturbationReport report;
  report.aspects = std::move(aspects);
  const auto base = model.predict(sentences);
  report.levels = base.levels;
  for (std::size_t a = 0; a < kNumAspects; ++a)
    report.confidence[a] = 100.0 * base.probabilities[a][static_cast<std::size_t>(code(base.levels[a]))];

  for (std::size_t k = 0; k < t; ++k) {
    Eigen::MatrixXd reduced(sentences.rows(), static_cast<Eigen::Index>(t - 1));
    const auto ki = static_cast<Eigen::Index>(k);
    reduced.leftCols(ki) = sentences.leftCols(ki);
    reduced.rightCols(static_cast<Eigen::Index>(t - 1 - k)) =
        sentences.rightCols(static_cast<Eigen::Index>(t - 1 - k));
    PerturbationRecord r = compare_inputs(model, sentences, reduced);
    r.sentence_index = k;
    if (!texts.empty()) r.text = texts[k];
    report.records.push_back(std::move(r));
  }
  return report;
}

std::size_t most_salient(const PerturbationReport& report, Aspect aspect) {
  if (report.records.empty()) throw InputError("empty perturbation report");
  std::size_t best = 0;
  for (std::size_t k = 1; k < report.records.size(); ++k) {
    if (report.records[k].delta[index(aspect)] < report.records[best].delta[index(aspect)])
      best = k;
  }
  return best;
}

json PerturbationReport::to_json() const {
  json recs = json::array();
  for (const auto& r : records) {
    json delta = json::object(), trans = json::object();
    for (Aspect a : aspects) {
      delta[std::string(aspect_key(a))] = r.delta[index(a)];
      trans[std::string(aspect_key(a))] = r.transition[index(a)];
    }
    recs.push_back({{"sentence_index", r.sentence_index},
                    {"text", r.text},
                    {"delta_pp", delta},
                    {"transition", trans}});
  }
  json levels_j = json::object(), conf = json::object();
  for (Aspect a : aspects) {
    levels_j[std::string(aspect_key(a))] = std::string(level_name(levels[index(a)]));
    conf[std::string(aspect_key(a))] = confidence[index(a)];
  }
  return {{"item_id", item_id}, {"levels", levels_j}, {"confidence_pct", conf},
          {"records", recs}};
}

std::string PerturbationReport::to_table() const {
  std::size_t text_w = 16;
  for (const auto& r : records) text_w = std::max(text_w, r.text.size());
  constexpr int col_w = 13;
  std::ostringstream out;
  char buf[64];
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  auto cell = [&](std::string s) {
    // Arrows are 3 bytes but one column wide.
    std::size_t visible = 0;
    for (unsigned char c : s) visible += (c & 0xC0) != 0x80;
    if (visible < col_w) s.insert(0, col_w - visible, ' ');
    return s;
  };

  out << pad("#", 4) << pad("Removed sentence", text_w);
  for (Aspect a : aspects) out << cell(std::string(aspect_key(a)));
  out << '\n' << pad("", 4) << pad("Rating", text_w);
  for (Aspect a : aspects) out << cell(std::string(level_name(levels[index(a)])));
  out << '\n' << pad("", 4) << pad("Whole confidence", text_w);
  for (Aspect a : aspects) {
    std::snprintf(buf, sizeof buf, "%.2f", confidence[index(a)]);
    out << cell(buf);
  }
  out << '\n';
  for (const auto& r : records) {
    out << pad(std::to_string(r.sentence_index + 1), 4) << pad(r.text, text_w);
    for (Aspect a : aspects) {
      std::snprintf(buf, sizeof buf, "%.2f", r.delta[index(a)]);
      std::string c = buf;
      const auto arrow = transition_arrow(r.transition[index(a)]);
      if (!arrow.empty()) c += " " + std::string(arrow);
      out << cell(c);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace lyricsense
