#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lyricsense/corpus.hpp"
#include "lyricsense/model.hpp"

namespace lyricsense {

using AspectMatrix = std::array<std::array<double, kNumAspects>, kNumAspects>;

struct CorrelationMatrix {
  std::size_t n = 0;
  AspectMatrix rho{};
  AspectMatrix p_value{};
  // "t-approximation" or "permutation".
  std::string p_method;

  nlohmann::json to_json() const;
};

// Spearman rho over raw 0..5 scores for every aspect pair. permutations > 0
// switches p-values to the seeded permutation test.
CorrelationMatrix correlation_matrix(std::span<const MusicItem> items,
                                     std::size_t permutations = 0,
                                     std::uint64_t seed = 0);

struct PerturbationRecord {
  std::size_t sentence_index = 0;
  std::string text;
  // Percentage-point change of the class predicted for the full item.
  std::array<double, kNumAspects> delta{};
  // New level minus original level.
  std::array<int, kNumAspects> transition{};
};

struct PerturbationReport {
  std::string item_id;
  std::vector<Aspect> aspects;
  Levels levels{};
  // Percentage confidence of the full-item prediction per aspect.
  std::array<double, kNumAspects> confidence{};
  std::vector<PerturbationRecord> records;

  nlohmann::json to_json() const;
  // Aligned text table: one row per removed sentence, deltas with arrows.
  std::string to_table() const;
};

// Effect of replacing the full input with `reduced` on the prediction made
// for `full`.
PerturbationRecord compare_inputs(const Model& model, const Eigen::MatrixXd& full,
                                  const Eigen::MatrixXd& reduced);

// One record per sentence, each dropping that sentence's column. `texts` may
// be empty or one per column. Throws InputError for fewer than 2 sentences.
PerturbationReport perturb_sentences(const Model& model,
                                     const Eigen::MatrixXd& sentences,
                                     std::span<const std::string> texts = {},
                                     std::vector<Aspect> aspects = {
                                         kAllAspects.begin(), kAllAspects.end()});

// Index of the record with the most negative delta for `aspect`.
std::size_t most_salient(const PerturbationReport& report, Aspect aspect);

// "⇓" (-2), "↓" (-1), "" (0), "↑" (+1), "⇑" (+2).
std::string_view transition_arrow(int transition) noexcept;

}  // namespace lyricsense
