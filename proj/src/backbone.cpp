#include "lyricsense/backbone.hpp"

#include <cmath>

#include "lyricsense/error.hpp"
#include "lyricsense/random.hpp"

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace lyricsense {
namespace {

VectorXd sigmoid(const VectorXd& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Index as_index(std::size_t n) { return static_cast<Index>(n); }

}  // namespace

std::string_view pooling_name(Pooling p) noexcept {
  return p == Pooling::Mean ? "mean" : "attention";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "mean") return Pooling::Mean;
  if (name == "attention") return Pooling::Attention;
  throw InputError("unknown pooling mode '" + std::string(name) + "'");
}

void BackboneConfig::validate() const {
  if (input_dim == 0 || hidden == 0 || n_aspects == 0 || n_classes == 0 ||
      head_outputs == 0)
    throw ShapeError("backbone dims must all be at least 1");
}

json BackboneConfig::to_json() const {
  return {{"input_dim", input_dim},
          {"hidden", hidden},
          {"attention_dim", attention_dim},
          {"pooling", std::string(pooling_name(pooling))},
          {"cell", "gru"},
          {"n_aspects", n_aspects},
          {"n_classes", n_classes},
          {"head_outputs", head_outputs},
          {"rank_head", rank_head},
          {"aspect_attention", aspect_attention},
          {"seed", seed}};
}

BackboneConfig BackboneConfig::from_json(const json& j) {
  BackboneConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.attention_dim = j.at("attention_dim").get<std::size_t>();
  c.pooling = parse_pooling(j.at("pooling").get<std::string>());
  if (j.at("cell").get<std::string>() != "gru")
    throw InputError("unsupported recurrent cell '" +
                     j.at("cell").get<std::string>() + "'");
  c.n_aspects = j.at("n_aspects").get<std::size_t>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.head_outputs = j.at("head_outputs").get<std::size_t>();
  c.rank_head = j.at("rank_head").get<bool>();
  c.aspect_attention = j.at("aspect_attention").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

ParamLayout::ParamLayout(const BackboneConfig& c) {
  c.validate();
  const auto in = as_index(c.input_dim);
  const auto h = as_index(c.hidden);
  const auto d = as_index(c.doc_dim());
  const auto a = as_index(c.attn_width());
  const auto hidden = c.hidden;

  const char* dir_name[2] = {"fwd", "bwd"};
  for (int dir = 0; dir < 2; ++dir) {
    const std::string p = std::string("gru.") + dir_name[dir] + ".";
    index_.gru[dir].wx = add(p + "w_x", 3 * h, in, hidden);
    index_.gru[dir].wh = add(p + "w_h", 3 * h, h, hidden);
    index_.gru[dir].bx = add(p + "b_x", 3 * h, 1, hidden);
    index_.gru[dir].bh = add(p + "b_h", 3 * h, 1, hidden);
  }
  if (c.pooling == Pooling::Attention) {
    index_.pool_w = add("pool.w", a, d, c.doc_dim());
    index_.pool_b = add("pool.b", a, 1, c.doc_dim());
    index_.pool_v = add("pool.v", a, 1, c.attn_width());
  }
  index_.proj_w = add("proj.w", d, d, c.doc_dim());
  index_.proj_b = add("proj.b", d, 1, c.doc_dim());
  for (std::size_t k = 0; k < c.n_aspects; ++k)
    index_.attn.push_back(
        add("attn." + std::to_string(k), d, d, c.doc_dim()));
  for (std::size_t k = 0; k < c.n_aspects; ++k) {
    index_.head_w.push_back(add("head." + std::to_string(k) + ".w",
                                as_index(c.head_outputs), d, c.doc_dim()));
    index_.head_b.push_back(add("head." + std::to_string(k) + ".b",
                                as_index(c.head_outputs), 1, c.doc_dim()));
  }
  if (c.rank_head) {
    for (std::size_t k = 0; k < c.n_aspects; ++k) {
      index_.rank_w.push_back(add("rank." + std::to_string(k) + ".w", 3, 3 * d,
                                  3 * c.doc_dim()));
      index_.rank_b.push_back(
          add("rank." + std::to_string(k) + ".b", 3, 1, 3 * c.doc_dim()));
    }
  }
}

std::size_t ParamLayout::add(std::string name, Index rows, Index cols,
                             std::size_t fan_in) {
  tensors_.push_back({std::move(name), rows, cols, total_, fan_in});
  total_ += tensors_.back().size();
  return tensors_.size() - 1;
}

MatMap ParamLayout::mat(std::span<double> buf, std::size_t t) const {
  const auto& s = tensors_[t];
  return MatMap(buf.data() + s.offset, s.rows, s.cols);
}

ConstMatMap ParamLayout::mat(std::span<const double> buf, std::size_t t) const {
  const auto& s = tensors_[t];
  return ConstMatMap(buf.data() + s.offset, s.rows, s.cols);
}

VecMap ParamLayout::vec(std::span<double> buf, std::size_t t) const {
  const auto& s = tensors_[t];
  return VecMap(buf.data() + s.offset, s.rows * s.cols);
}

ConstVecMap ParamLayout::vec(std::span<const double> buf, std::size_t t) const {
  const auto& s = tensors_[t];
  return ConstVecMap(buf.data() + s.offset, s.rows * s.cols);
}

ModelParams ModelParams::zeros(const BackboneConfig& config) {
  ParamLayout layout(config);
  std::vector<double> values(layout.total(), 0.0);
  return {config, std::move(layout), std::move(values)};
}

ModelParams ModelParams::init(const BackboneConfig& config) {
  ModelParams p = zeros(config);
  Rng rng(config.seed);
  for (const auto& t : p.layout.tensors()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
    for (std::size_t i = 0; i < t.size(); ++i)
      p.values[t.offset + i] = rng.uniform(-bound, bound);
  }
  return p;
}

bool Gradients::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

VectorXd softmax(const VectorXd& z) {
  VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

VectorXd log_softmax(const VectorXd& z) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return z.array() - lse;
}

VectorXd aspect_attention(const VectorXd& x_in, const MatrixXd& w_attn,
                          VectorXd* softmax_out) {
  if (w_attn.rows() != x_in.size() || w_attn.cols() != x_in.size())
    throw ShapeError("attention matrix must be d x d with d = " +
                     std::to_string(x_in.size()));
  if (!x_in.allFinite()) throw ShapeError("non-finite attention input");
  // Row vector x_in times W is W^T x_in as a column.
  VectorXd s = softmax(w_attn.transpose() * x_in);
  VectorXd out = x_in.array() * (1.0 + s.array());
  if (softmax_out) *softmax_out = std::move(s);
  return out;
}

namespace {

void check_input(const ModelParams& params, const MatrixXd& x) {
  if (x.cols() == 0) throw ShapeError("document has no sentences");
  if (x.rows() != as_index(params.config.input_dim))
    throw ShapeError("sentence vectors have dim " + std::to_string(x.rows()) +
                     ", backbone expects " +
                     std::to_string(params.config.input_dim));
}

void run_direction(const ModelParams& params, int dir, const MatrixXd& x,
                   DirectionTrace& tr, MatrixXd& outputs) {
  const auto& g = params.idx().gru[dir];
  const Index h = as_index(params.config.hidden);
  const Index steps = x.cols();
  MatrixXd xg = params.mat(g.wx) * x;
  xg.colwise() += params.vec(g.bx);
  const auto wh = params.mat(g.wh);
  const auto bh = params.vec(g.bh);

  tr.h = MatrixXd::Zero(h, steps + 1);
  tr.r.resize(h, steps);
  tr.z.resize(h, steps);
  tr.n.resize(h, steps);
  tr.hn.resize(h, steps);
  for (Index k = 0; k < steps; ++k) {
    const Index t = dir == 0 ? k : steps - 1 - k;
    const VectorXd gh = wh * tr.h.col(k) + bh;
    const VectorXd r = sigmoid(xg.col(t).segment(0, h) + gh.segment(0, h));
    const VectorXd z = sigmoid(xg.col(t).segment(h, h) + gh.segment(h, h));
    const VectorXd hn = gh.segment(2 * h, h);
    const VectorXd n =
        (xg.col(t).segment(2 * h, h).array() + r.array() * hn.array()).tanh();
    tr.h.col(k + 1) =
        (1.0 - z.array()) * n.array() + z.array() * tr.h.col(k).array();
    tr.r.col(k) = r;
    tr.z.col(k) = z;
    tr.n.col(k) = n;
    tr.hn.col(k) = hn;
    outputs.col(t).segment(dir * h, h) = tr.h.col(k + 1);
  }
}

void pool(const ModelParams& params, DocForward& f) {
  const Index steps = f.outputs.cols();
  if (params.config.pooling == Pooling::Mean) {
    f.att_weights = VectorXd::Constant(steps, 1.0 / static_cast<double>(steps));
    f.pooled = f.outputs * f.att_weights;
    return;
  }
  const auto& ix = params.idx();
  f.att_hidden = params.mat(ix.pool_w) * f.outputs;
  f.att_hidden.colwise() += params.vec(ix.pool_b);
  f.att_hidden = f.att_hidden.array().tanh();
  f.att_weights = softmax(f.att_hidden.transpose() * params.vec(ix.pool_v));
  f.pooled = f.outputs * f.att_weights;
}

}  // namespace

Eigen::VectorXd encode_document(const ModelParams& params,
                                const MatrixXd& sentences) {
  check_input(params, sentences);
  DocForward f;
  f.outputs.resize(as_index(params.config.doc_dim()), sentences.cols());
  for (int dir = 0; dir < 2; ++dir)
    run_direction(params, dir, sentences, f.dirs[dir], f.outputs);
  pool(params, f);
  return f.pooled;
}

DocForward forward(const ModelParams& params, const MatrixXd& sentences,
                   bool keep_trace) {
  check_input(params, sentences);
  const auto& c = params.config;
  const auto& ix = params.idx();

  DocForward f;
  f.outputs.resize(as_index(c.doc_dim()), sentences.cols());
  for (int dir = 0; dir < 2; ++dir)
    run_direction(params, dir, sentences, f.dirs[dir], f.outputs);
  pool(params, f);

  f.x_in = (params.mat(ix.proj_w) * f.pooled + params.vec(ix.proj_b))
               .array()
               .tanh();
  f.logits.resize(as_index(c.n_aspects), as_index(c.head_outputs));
  f.attn_softmax.resize(c.n_aspects);
  f.x_out.resize(c.n_aspects);
  for (std::size_t a = 0; a < c.n_aspects; ++a) {
    if (c.aspect_attention) {
      f.x_out[a] = aspect_attention(f.x_in, params.mat(ix.attn[a]),
                                    &f.attn_softmax[a]);
    } else {
      f.x_out[a] = f.x_in;
    }
    f.logits.row(as_index(a)) =
        (params.mat(ix.head_w[a]) * f.x_out[a] + params.vec(ix.head_b[a]))
            .transpose();
  }

  if (keep_trace) {
    f.inputs = sentences;
    f.traced = true;
  } else {
    for (auto& d : f.dirs) d = DirectionTrace{};
    f.att_hidden.resize(0, 0);
  }
  return f;
}

void backward_into(const ModelParams& params, const DocForward& f,
                   const MatrixXd& logit_grads,
                   const std::vector<VectorXd>* x_out_grads, Gradients& grads,
                   double scale) {
  if (!f.traced)
    throw Error("backward: forward pass was run without cached intermediates");
  const auto& c = params.config;
  const auto& ix = params.idx();
  const auto& L = params.layout;
  if (logit_grads.rows() != as_index(c.n_aspects) ||
      logit_grads.cols() != as_index(c.head_outputs))
    throw ShapeError("logit gradient shape does not match the heads");
  if (x_out_grads && !x_out_grads->empty() &&
      x_out_grads->size() != c.n_aspects)
    throw ShapeError("x_out gradient count does not match aspect count");
  if (grads.values.size() != params.values.size())
    grads.values.assign(params.values.size(), 0.0);
  std::span<double> g(grads.values);

  const Index d = as_index(c.doc_dim());
  VectorXd dx_in = VectorXd::Zero(d);
  for (std::size_t a = 0; a < c.n_aspects; ++a) {
    const VectorXd dlog = scale * logit_grads.row(as_index(a)).transpose();
    VectorXd dx_out = params.mat(ix.head_w[a]).transpose() * dlog;
    if (x_out_grads && !x_out_grads->empty())
      dx_out += scale * (*x_out_grads)[a];
    L.mat(g, ix.head_w[a]).noalias() += dlog * f.x_out[a].transpose();
    L.vec(g, ix.head_b[a]) += dlog;

    if (!c.aspect_attention) {
      dx_in += dx_out;
      continue;
    }
    const VectorXd& s = f.attn_softmax[a];
    dx_in.array() += dx_out.array() * (1.0 + s.array());
    const VectorXd ds = dx_out.cwiseProduct(f.x_in);
    const VectorXd dz = s.array() * (ds.array() - s.dot(ds));
    L.mat(g, ix.attn[a]).noalias() += f.x_in * dz.transpose();
    dx_in.noalias() += params.mat(ix.attn[a]) * dz;
  }

  const VectorXd dpre = dx_in.array() * (1.0 - f.x_in.array().square());
  L.mat(g, ix.proj_w).noalias() += dpre * f.pooled.transpose();
  L.vec(g, ix.proj_b) += dpre;
  const VectorXd dpooled = params.mat(ix.proj_w).transpose() * dpre;

  const Index steps = f.outputs.cols();
  MatrixXd d_out;
  if (c.pooling == Pooling::Mean) {
    d_out = dpooled * f.att_weights.transpose();
  } else {
    const VectorXd& alpha = f.att_weights;
    const VectorXd dalpha = f.outputs.transpose() * dpooled;
    const VectorXd de = alpha.array() * (dalpha.array() - alpha.dot(dalpha));
    L.vec(g, ix.pool_v).noalias() += f.att_hidden * de;
    const MatrixXd du_pre =
        (params.vec(ix.pool_v) * de.transpose()).array() *
        (1.0 - f.att_hidden.array().square());
    L.mat(g, ix.pool_w).noalias() += du_pre * f.outputs.transpose();
    L.vec(g, ix.pool_b) += du_pre.rowwise().sum();
    d_out = dpooled * alpha.transpose();
    d_out.noalias() += params.mat(ix.pool_w).transpose() * du_pre;
  }

  const Index h = as_index(c.hidden);
  for (int dir = 0; dir < 2; ++dir) {
    const auto& gi = ix.gru[dir];
    const auto& tr = f.dirs[dir];
    const auto wh = params.mat(gi.wh);
    MatrixXd dgx(3 * h, steps);
    MatrixXd dgh(3 * h, steps);
    VectorXd dh_next = VectorXd::Zero(h);
    for (Index k = steps - 1; k >= 0; --k) {
      const Index t = dir == 0 ? k : steps - 1 - k;
      const VectorXd dh = dh_next + d_out.col(t).segment(dir * h, h);
      const auto hp = tr.h.col(k).array();
      const auto z = tr.z.col(k).array();
      const auto r = tr.r.col(k).array();
      const auto n = tr.n.col(k).array();
      const auto hn = tr.hn.col(k).array();

      const auto dn = dh.array() * (1.0 - z);
      const auto dz = dh.array() * (hp - n);
      const auto dan = (dn * (1.0 - n.square())).eval();
      dgx.col(t).segment(0, h) = dan * hn * r * (1.0 - r);
      dgx.col(t).segment(h, h) = dz * z * (1.0 - z);
      dgx.col(t).segment(2 * h, h) = dan;
      dgh.col(k).segment(0, h) = dgx.col(t).segment(0, h);
      dgh.col(k).segment(h, h) = dgx.col(t).segment(h, h);
      dgh.col(k).segment(2 * h, h) = dan * r;
      dh_next = dh.array() * z;
      dh_next.noalias() += wh.transpose() * dgh.col(k);
    }
    L.mat(g, gi.wx).noalias() += dgx * f.inputs.transpose();
    L.vec(g, gi.bx) += dgx.rowwise().sum();
    L.mat(g, gi.wh).noalias() += dgh * tr.h.leftCols(steps).transpose();
    L.vec(g, gi.bh) += dgh.rowwise().sum();
  }
}

Gradients backward(const ModelParams& params, const DocForward& fwd,
                   const MatrixXd& logit_grads,
                   const std::vector<VectorXd>* x_out_grads) {
  Gradients g = Gradients::zeros_like(params);
  backward_into(params, fwd, logit_grads, x_out_grads, g, 1.0);
  return g;
}

}  // namespace lyricsense
