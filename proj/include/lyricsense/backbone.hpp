#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace lyricsense {

enum class CellType { Gru };
enum class Pooling { Mean, Attention };

std::string_view pooling_name(Pooling p) noexcept;
Pooling parse_pooling(std::string_view name);

struct BackboneConfig {
  std::size_t input_dim = 0;
  // Recurrent state size per direction.
  std::size_t hidden = 200;
  // Additive-attention pooling width; 0 means `hidden`.
  std::size_t attention_dim = 0;
  Pooling pooling = Pooling::Attention;
  CellType cell = CellType::Gru;
  std::size_t n_aspects = 5;
  std::size_t n_classes = 3;
  // Logits per aspect head: n_classes, or n_classes - 1 threshold logits.
  std::size_t head_outputs = 3;
  // Per-aspect 3-way comparator over concat(x_a, x_b, x_a - x_b).
  bool rank_head = false;
  // Ablation: false makes x_out = x_in.
  bool aspect_attention = true;
  std::uint64_t seed = 0;

  std::size_t doc_dim() const noexcept { return 2 * hidden; }
  std::size_t attn_width() const noexcept {
    return attention_dim == 0 ? hidden : attention_dim;
  }
  void validate() const;

  nlohmann::json to_json() const;
  static BackboneConfig from_json(const nlohmann::json& j);
  bool operator==(const BackboneConfig&) const = default;
};

struct TensorSpec {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  std::size_t fan_in = 1;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(rows * cols);
  }
};

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Tensor indices into a ParamLayout.
struct ParamIndex {
  struct Gru {
    std::size_t wx, wh, bx, bh;
  };
  std::array<Gru, 2> gru{};
  std::size_t pool_w = 0, pool_b = 0, pool_v = 0;
  std::size_t proj_w = 0, proj_b = 0;
  std::vector<std::size_t> attn;
  std::vector<std::size_t> head_w, head_b;
  std::vector<std::size_t> rank_w, rank_b;
};

// Flat parameter order is the order tensors were added; this is also the
// checkpoint payload order.
class ParamLayout {
 public:
  explicit ParamLayout(const BackboneConfig& config);

  const std::vector<TensorSpec>& tensors() const noexcept { return tensors_; }
  const ParamIndex& index() const noexcept { return index_; }
  std::size_t total() const noexcept { return total_; }

  MatMap mat(std::span<double> buf, std::size_t t) const;
  ConstMatMap mat(std::span<const double> buf, std::size_t t) const;
  VecMap vec(std::span<double> buf, std::size_t t) const;
  ConstVecMap vec(std::span<const double> buf, std::size_t t) const;

 private:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols,
                  std::size_t fan_in);

  std::vector<TensorSpec> tensors_;
  ParamIndex index_;
  std::size_t total_ = 0;
};

struct ModelParams {
  BackboneConfig config;
  ParamLayout layout;
  std::vector<double> values;

  // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) from config.seed.
  static ModelParams init(const BackboneConfig& config);
  // Zero-filled, for tests that set tensors by hand.
  static ModelParams zeros(const BackboneConfig& config);

  MatMap mat(std::size_t t) { return layout.mat(std::span<double>(values), t); }
  ConstMatMap mat(std::size_t t) const {
    return layout.mat(std::span<const double>(values), t);
  }
  VecMap vec(std::size_t t) { return layout.vec(std::span<double>(values), t); }
  ConstVecMap vec(std::size_t t) const {
    return layout.vec(std::span<const double>(values), t);
  }
  const ParamIndex& idx() const noexcept { return layout.index(); }
};

// Same layout as the parameters they belong to.
struct Gradients {
  std::vector<double> values;

  static Gradients zeros_like(const ModelParams& p) {
    return {std::vector<double>(p.values.size(), 0.0)};
  }
  void set_zero() { std::fill(values.begin(), values.end(), 0.0); }
  bool all_finite() const;
};

// x_out = x_in + x_in * softmax(x_in W), softmax over the feature axis.
// `softmax_out` optionally receives the softmax weights.
Eigen::VectorXd aspect_attention(const Eigen::VectorXd& x_in,
                                 const Eigen::MatrixXd& w_attn,
                                 Eigen::VectorXd* softmax_out = nullptr);

Eigen::VectorXd softmax(const Eigen::VectorXd& z);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& z);

struct DirectionTrace {
  // Column k+1 is the state after the k-th step in processing order;
  // column 0 is the zero initial state.
  Eigen::MatrixXd h;
  Eigen::MatrixXd r, z, n;
  // W_hn h_prev + b_hn, needed for the reset-gate gradient.
  Eigen::MatrixXd hn;
};

struct DocForward {
  Eigen::MatrixXd inputs;  // input_dim x T
  std::array<DirectionTrace, 2> dirs;
  Eigen::MatrixXd outputs;     // doc_dim x T
  Eigen::MatrixXd att_hidden;  // attn_width x T
  Eigen::VectorXd att_weights; // T
  Eigen::VectorXd pooled;
  Eigen::VectorXd x_in;
  std::vector<Eigen::VectorXd> attn_softmax;
  std::vector<Eigen::VectorXd> x_out;
  Eigen::MatrixXd logits;  // n_aspects x head_outputs
  bool traced = false;
};

// Bi-directional recurrent encoding plus pooling. Throws ShapeError on an
// empty document or input-dim mismatch.
Eigen::VectorXd encode_document(const ModelParams& params,
                                const Eigen::MatrixXd& sentences);

// keep_trace=false skips storing intermediates; backward then rejects it.
DocForward forward(const ModelParams& params, const Eigen::MatrixXd& sentences,
                   bool keep_trace = true);

// Accumulates scale * d(sum(logits .* upstream) + sum_a x_out[a] . extra[a])
// into grads. `x_out_grads` may be null (or empty).
void backward_into(const ModelParams& params, const DocForward& fwd,
                   const Eigen::MatrixXd& logit_grads,
                   const std::vector<Eigen::VectorXd>* x_out_grads,
                   Gradients& grads, double scale = 1.0);

Gradients backward(const ModelParams& params, const DocForward& fwd,
                   const Eigen::MatrixXd& logit_grads,
                   const std::vector<Eigen::VectorXd>* x_out_grads = nullptr);

}  // namespace lyricsense
