#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lyricsense/aspect.hpp"

namespace lyricsense {

// Most frequent training level for every eval item; ties go to the lower
// level.
std::vector<SeverityLevel> majority_predict(
    std::span<const SeverityLevel> train_labels, std::size_t n_eval);

// One-vs-rest L2-regularized logistic model over dense features.
struct LinearModel {
  Eigen::MatrixXd weights;  // n_classes x dim
  Eigen::VectorXd bias;     // n_classes
  // Set when training data held one class only; predict then returns it.
  int constant_class = -1;

  // Per-class sigmoid scores, rows = samples.
  Eigen::MatrixXd scores(const Eigen::MatrixXd& features) const;
  std::vector<SeverityLevel> predict(const Eigen::MatrixXd& features) const;
};

struct LinearTrainConfig {
  double l2 = 1e-3;
  std::size_t epochs = 200;
  // Upper bound on the step; the trainer shrinks it to each block's
  // Lipschitz bound so full-batch loss never increases.
  double lr = 1.0;
  std::uint64_t seed = 0;
};

struct LinearTrainResult {
  LinearModel model;
  // Objective after initialization and after each epoch.
  std::vector<double> loss_history;
};

// Mean logistic loss over samples and classes plus l2/2 * ||W||^2.
double linear_objective(const LinearModel& m, const Eigen::MatrixXd& features,
                        std::span<const SeverityLevel> labels, double l2);

LinearTrainResult linear_train(const Eigen::MatrixXd& features,
                               std::span<const SeverityLevel> labels,
                               const LinearTrainConfig& config);

}  // namespace lyricsense
