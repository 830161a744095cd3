#pragma once

#include <array>
#include <filesystem>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lyricsense/backbone.hpp"
#include "lyricsense/ordinal.hpp"

namespace lyricsense {

// Backbone parameters plus the ordinal strategy that shaped and trained them.
struct Model {
  OrdinalStrategy strategy = OrdinalStrategy::Plain;
  LossWeights weights;
  ModelParams params;

  static Model create(OrdinalStrategy strategy, const BackboneConfig& base,
                      LossWeights weights = {});

  struct Prediction {
    std::array<std::array<double, 3>, kNumAspects> probabilities{};
    Levels levels{};
  };
  Prediction predict(const Eigen::MatrixXd& sentences) const;

  nlohmann::json header_json() const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Checkpoint layout (little-endian):
//   "ORDM" | u32 version | u64 header length | header JSON (UTF-8)
//   | u64 parameter count | parameter count x f64
// The header holds the backbone config, strategy, loss weights, and the
// caller's metadata under "meta".
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& meta = nlohmann::json::object());

struct LoadedCheckpoint {
  Model model;
  nlohmann::json meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Rejects a checkpoint whose backbone config differs from `expected`.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const BackboneConfig& expected);

}  // namespace lyricsense
