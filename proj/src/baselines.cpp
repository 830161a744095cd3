#include "lyricsense/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "lyricsense/error.hpp"
#include "lyricsense/log.hpp"
#include "lyricsense/random.hpp"

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace lyricsense {
namespace {

MatrixXd one_hot(std::span<const SeverityLevel> labels) {
  MatrixXd y = MatrixXd::Zero(static_cast<Index>(labels.size()), kNumLevels);
  for (std::size_t i = 0; i < labels.size(); ++i)
    y(static_cast<Index>(i), code(labels[i])) = 1.0;
  return y;
}

MatrixXd raw_scores(const LinearModel& m, const MatrixXd& x) {
  MatrixXd s = x * m.weights.transpose();
  s.rowwise() += m.bias.transpose();
  return s;
}

double softplus(double v) {
  return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

std::vector<SeverityLevel> majority_predict(
    std::span<const SeverityLevel> train_labels, std::size_t n_eval) {
  if (train_labels.empty())
    throw InputError("majority_predict: no training labels");
  std::array<std::size_t, kNumLevels> counts{};
  for (auto l : train_labels) ++counts[static_cast<std::size_t>(code(l))];
  const auto best = static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  return std::vector<SeverityLevel>(n_eval, level_from_code(best));
}

MatrixXd LinearModel::scores(const MatrixXd& features) const {
  return raw_scores(*this, features).unaryExpr([](double v) { return sigmoid(v); });
}

std::vector<SeverityLevel> LinearModel::predict(const MatrixXd& features) const {
  std::vector<SeverityLevel> out(static_cast<std::size_t>(features.rows()));
  if (constant_class >= 0) {
    std::fill(out.begin(), out.end(), level_from_code(constant_class));
    return out;
  }
  const MatrixXd s = raw_scores(*this, features);
  for (Index i = 0; i < s.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < s.cols(); ++k) {
      if (s(i, k) > s(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = level_from_code(static_cast<int>(best));
  }
  return out;
}

double linear_objective(const LinearModel& m, const MatrixXd& features,
                        std::span<const SeverityLevel> labels, double l2) {
  const MatrixXd s = raw_scores(m, features);
  const MatrixXd y = one_hot(labels);
  double loss = 0.0;
  for (Index i = 0; i < s.rows(); ++i)
    for (Index k = 0; k < s.cols(); ++k) loss += softplus(s(i, k)) - y(i, k) * s(i, k);
  loss /= static_cast<double>(s.size());
  return loss + 0.5 * l2 * m.weights.squaredNorm();
}

LinearTrainResult linear_train(const MatrixXd& features,
                               std::span<const SeverityLevel> labels,
                               const LinearTrainConfig& config) {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw ShapeError("linear_train: feature rows and labels differ");
  if (labels.empty()) throw InputError("linear_train: no training data");
  if (!features.allFinite()) throw InputError("linear_train: non-finite features");

  LinearTrainResult out;
  LinearModel& m = out.model;
  const Index dim = features.cols();
  Rng rng(config.seed);
  m.weights.resize(kNumLevels, dim);
  for (Index j = 0; j < m.weights.size(); ++j)
    m.weights.data()[j] = rng.uniform(-0.01, 0.01);
  m.bias = VectorXd::Zero(kNumLevels);

  const int first = code(labels.front());
  if (std::all_of(labels.begin(), labels.end(),
                  [&](SeverityLevel l) { return code(l) == first; })) {
    warn("linear_train: training labels contain a single class; model predicts it");
    m.constant_class = first;
  }

  const double n = static_cast<double>(labels.size());
  const double scale = 1.0 / (n * kNumLevels);
  const MatrixXd y = one_hot(labels);
  // Block Lipschitz bounds of the objective: sigma' <= 1/4 and
  // lambda_max(X^T X) <= ||X||_F^2.
  const double lip_w = 0.25 * scale * features.squaredNorm() + config.l2;
  const double lip_b = 0.25 * scale * n;
  const double step_w = std::min(config.lr, 1.0 / lip_w);
  const double step_b = std::min(config.lr, 1.0 / lip_b);

  out.loss_history.push_back(linear_objective(m, features, labels, config.l2));
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    MatrixXd resid = raw_scores(m, features).unaryExpr([](double v) { return sigmoid(v); }) - y;
    const MatrixXd grad_w = scale * resid.transpose() * features + config.l2 * m.weights;
    m.weights -= step_w * grad_w;

    resid = raw_scores(m, features).unaryExpr([](double v) { return sigmoid(v); }) - y;
    const VectorXd grad_b = scale * resid.colwise().sum().transpose();
    m.bias -= step_b * grad_b;

    out.loss_history.push_back(linear_objective(m, features, labels, config.l2));
  }
  return out;
}

}  // namespace lyricsense
