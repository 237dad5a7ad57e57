#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/rng.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

enum class AttnPlacement { Output, Hidden };
enum class AttnSteps { Last, All };

inline const char* to_string(AttnPlacement p) {
  return p == AttnPlacement::Output ? "output" : "hidden";
}
inline const char* to_string(AttnSteps s) { return s == AttnSteps::Last ? "last" : "all"; }

struct ModelConfig {
  int input_dim = 32 * 32 * 3;
  int hidden_size = 512;
  int num_layers = 2;
  int seq_len = 10;
  AttnPlacement attn_placement = AttnPlacement::Output;
  AttnSteps attn_steps = AttnSteps::All;
  // Reproduces the literal softmax(exp(e)) composition instead of softmax(e).
  bool literal_attn_exp = false;

  void validate() const {
    if (input_dim < 1) throw ContractError("model config: input_dim must be >= 1");
    if (hidden_size < 1) throw ContractError("model config: hidden_size must be >= 1");
    if (num_layers < 1) throw ContractError("model config: num_layers must be >= 1");
    if (seq_len < 1) throw ContractError("model config: seq_len must be >= 1");
  }
};

namespace detail {

template <class T>
inline Tensor<T> init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor<T> w(Shape{rows, cols});
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = static_cast<T>(rng.next_real(-bound, bound));
  return w;
}

}  // namespace detail

// One GRU layer. Weights follow the row-vector convention: y = x * W with
// W shaped [input_width x hidden]. Update-gate biases start at -1 so fresh
// hidden states are dominated by the current input rather than acting as a
// half-life-one moving average; a zero-bias start measurably starves the
// reconstruction of current-frame detail for the first few thousand steps.
template <class T>
struct GruLayerParams {
  Tensor<T> W_ir, W_iz, W_in;
  Tensor<T> W_hr, W_hz, W_hn;
  Tensor<T> b_ir, b_iz, b_in, b_hr, b_hz, b_hn;

  GruLayerParams() = default;

  GruLayerParams(std::size_t input_width, std::size_t hidden, Rng& rng)
      : W_ir(detail::init_weight<T>(input_width, hidden, rng)),
        W_iz(detail::init_weight<T>(input_width, hidden, rng)),
        W_in(detail::init_weight<T>(input_width, hidden, rng)),
        W_hr(detail::init_weight<T>(hidden, hidden, rng)),
        W_hz(detail::init_weight<T>(hidden, hidden, rng)),
        W_hn(detail::init_weight<T>(hidden, hidden, rng)),
        b_ir(Shape{hidden}),
        b_iz(Shape{hidden}, T(-1)),
        b_in(Shape{hidden}),
        b_hr(Shape{hidden}),
        b_hz(Shape{hidden}, T(-1)),
        b_hn(Shape{hidden}) {}

  std::size_t input_width() const { return W_ir.dim(0); }
  std::size_t hidden_size() const { return W_ir.dim(1); }
};

// Shared additive-attention parameters: W maps a per-step vector to one
// scalar score, so W is [d x 1] and b is [1].
template <class T>
struct AttentionParams {
  Tensor<T> W;
  Tensor<T> b;

  AttentionParams() = default;
  AttentionParams(std::size_t width, Rng& rng)
      : W(detail::init_weight<T>(width, 1, rng)), b(Shape{1}) {}

  std::size_t width() const { return W.dim(0); }
};

// r_t = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
// z_t = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
// n_t = tanh(x W_in + b_in + r_t (h W_hn + b_hn))
// h_t = (1 - z_t) n_t + z_t h_{t-1}
template <class T>
Tensor<T> gru_cell_step(const GruLayerParams<T>& p, const Tensor<T>& x, const Tensor<T>& h_prev,
                        Tape<T>* tape = nullptr) {
  Tensor<T> r = sigmoid(add(add(matmul(x, p.W_ir, tape), p.b_ir, tape),
                            add(matmul(h_prev, p.W_hr, tape), p.b_hr, tape), tape),
                        tape);
  Tensor<T> z = sigmoid(add(add(matmul(x, p.W_iz, tape), p.b_iz, tape),
                            add(matmul(h_prev, p.W_hz, tape), p.b_hz, tape), tape),
                        tape);
  Tensor<T> hn = add(matmul(h_prev, p.W_hn, tape), p.b_hn, tape);
  Tensor<T> n = tanh(add(add(matmul(x, p.W_in, tape), p.b_in, tape), mul(r, hn, tape), tape),
                     tape);
  Tensor<T> one_minus_z = add_scalar(scale(z, T(-1), tape), T(1), tape);
  return add(mul(one_minus_z, n, tape), mul(z, h_prev, tape), tape);
}

// Softmax-normalized context weights over the per-step vectors O_t.
template <class T>
Tensor<T> attention_context(const AttentionParams<T>& attn, const std::vector<Tensor<T>>& outputs,
                            Tape<T>* tape = nullptr, bool literal_exp = false) {
  std::vector<Tensor<T>> scores;
  scores.reserve(outputs.size());
  for (const auto& o : outputs) {
    if (o.size() != attn.width())
      throw DimensionError("attention_context: step vector " + shape_str(o.shape()) +
                           " vs attention width " + shape_str(attn.W.shape()));
    scores.push_back(tanh(add(matmul(o, attn.W, tape), attn.b, tape), tape));
  }
  Tensor<T> e = concat(scores, tape);
  if (literal_exp) e = exp(e, tape);
  return softmax(e, tape);
}

// Context-weighted sum of the per-step vectors.
template <class T>
Tensor<T> attended_output(const std::vector<Tensor<T>>& outputs, const Tensor<T>& context,
                          Tape<T>* tape = nullptr) {
  return weighted_sum(outputs, context, tape);
}

// The Foresee network: stacked GRU layers, shared attention, and a fully
// connected reconstruction from hidden width to frame width.
template <class T>
class ForeseeModel {
 public:
  using scalar_type = T;

  ForeseeModel(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const auto hidden = static_cast<std::size_t>(cfg_.hidden_size);
    const auto in_dim = static_cast<std::size_t>(cfg_.input_dim);
    for (int l = 0; l < cfg_.num_layers; ++l)
      layers_.emplace_back(l == 0 ? in_dim : hidden, hidden, rng);
    attn_ = AttentionParams<T>(cfg_.attn_placement == AttnPlacement::Hidden ? hidden : in_dim, rng);
    recon_W_ = detail::init_weight<T>(hidden, in_dim, rng);
    recon_b_ = Tensor<T>(Shape{in_dim});
  }

  const ModelConfig& config() const { return cfg_; }
  std::vector<GruLayerParams<T>>& gru_layers() { return layers_; }
  const std::vector<GruLayerParams<T>>& gru_layers() const { return layers_; }
  AttentionParams<T>& attention() { return attn_; }
  const AttentionParams<T>& attention() const { return attn_; }
  Tensor<T>& recon_W() { return recon_W_; }
  Tensor<T>& recon_b() { return recon_b_; }
  const Tensor<T>& recon_W() const { return recon_W_; }
  const Tensor<T>& recon_b() const { return recon_b_; }

  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::string prefix = "gru" + std::to_string(l) + ".";
      const GruLayerParams<T>& p = layers_[l];
      out.emplace_back(prefix + "W_ir", p.W_ir);
      out.emplace_back(prefix + "W_iz", p.W_iz);
      out.emplace_back(prefix + "W_in", p.W_in);
      out.emplace_back(prefix + "W_hr", p.W_hr);
      out.emplace_back(prefix + "W_hz", p.W_hz);
      out.emplace_back(prefix + "W_hn", p.W_hn);
      out.emplace_back(prefix + "b_ir", p.b_ir);
      out.emplace_back(prefix + "b_iz", p.b_iz);
      out.emplace_back(prefix + "b_in", p.b_in);
      out.emplace_back(prefix + "b_hr", p.b_hr);
      out.emplace_back(prefix + "b_hz", p.b_hz);
      out.emplace_back(prefix + "b_hn", p.b_hn);
    }
    out.emplace_back("attn.W", attn_.W);
    out.emplace_back("attn.b", attn_.b);
    out.emplace_back("recon.W", recon_W_);
    out.emplace_back("recon.b", recon_b_);
    return out;
  }

  std::vector<Tensor<T>> parameters() const {
    std::vector<Tensor<T>> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  void set_requires_grad(bool on) {
    for (auto& t : parameters()) {
      Tensor<T> copy = t;  // shared handle
      copy.set_requires_grad(on);
    }
  }

  // Deep copy with independent parameter buffers.
  ForeseeModel clone() const {
    ForeseeModel out = *this;
    for (auto& layer : out.layers_) {
      layer.W_ir = layer.W_ir.clone();
      layer.W_iz = layer.W_iz.clone();
      layer.W_in = layer.W_in.clone();
      layer.W_hr = layer.W_hr.clone();
      layer.W_hz = layer.W_hz.clone();
      layer.W_hn = layer.W_hn.clone();
      layer.b_ir = layer.b_ir.clone();
      layer.b_iz = layer.b_iz.clone();
      layer.b_in = layer.b_in.clone();
      layer.b_hr = layer.b_hr.clone();
      layer.b_hz = layer.b_hz.clone();
      layer.b_hn = layer.b_hn.clone();
    }
    out.attn_.W = out.attn_.W.clone();
    out.attn_.b = out.attn_.b.clone();
    out.recon_W_ = out.recon_W_.clone();
    out.recon_b_ = out.recon_b_.clone();
    return out;
  }

 private:
  ModelConfig cfg_;
  std::vector<GruLayerParams<T>> layers_;
  AttentionParams<T> attn_;
  Tensor<T> recon_W_;
  Tensor<T> recon_b_;
};

// Linear reconstruction of a hidden vector to a frame. When the vector is
// already frame-width (attention over reconstructed outputs) this is the
// identity; clamping is the caller's concern at inference time.
template <class T>
Tensor<T> reconstruct(const ForeseeModel<T>& model, const Tensor<T>& h, Tape<T>* tape = nullptr) {
  if (h.size() == model.recon_W().dim(0))
    return add(matmul(h, model.recon_W(), tape), model.recon_b(), tape);
  if (h.size() == static_cast<std::size_t>(model.config().input_dim)) return h;
  throw DimensionError("reconstruct: input " + shape_str(h.shape()) + " matches neither hidden " +
                       shape_str(model.recon_W().shape()) + " nor frame width");
}

// Incremental unrolled execution of the Foresee network. step() consumes one
// input frame; predict() yields the next-frame prediction from the current
// state, attending over all steps so far when asked to.
template <class T>
class ForeseeUnroll {
 public:
  ForeseeUnroll(const ForeseeModel<T>& model, Tape<T>* tape) : model_(&model), tape_(tape) {
    const auto hidden = static_cast<std::size_t>(model.config().hidden_size);
    for (int l = 0; l < model.config().num_layers; ++l) h_.emplace_back(Shape{hidden});
  }

  void step(const Tensor<T>& x) {
    if (x.size() != static_cast<std::size_t>(model_->config().input_dim))
      throw DimensionError("foresee step: frame " + shape_str(x.shape()) + " vs input_dim " +
                           std::to_string(model_->config().input_dim));
    Tensor<T> cur = x;
    for (std::size_t l = 0; l < h_.size(); ++l) {
      h_[l] = gru_cell_step(model_->gru_layers()[l], cur, h_[l], tape_);
      cur = h_[l];
    }
    outputs_.push_back(cur);
    const AttentionParams<T>& attn = model_->attention();
    if (model_->config().attn_placement == AttnPlacement::Output) {
      Tensor<T> frame = add(matmul(cur, model_->recon_W(), tape_), model_->recon_b(), tape_);
      frames_.push_back(frame);
      scores_.push_back(tanh(add(matmul(frame, attn.W, tape_), attn.b, tape_), tape_));
    } else {
      scores_.push_back(tanh(add(matmul(cur, attn.W, tape_), attn.b, tape_), tape_));
    }
  }

  int steps() const { return static_cast<int>(outputs_.size()); }
  const std::vector<Tensor<T>>& outputs() const { return outputs_; }

  // Unclamped next-frame prediction from the state after the latest step.
  Tensor<T> predict(bool attend) {
    if (outputs_.empty()) throw ContractError("foresee predict: no steps consumed");
    const bool output_placement = model_->config().attn_placement == AttnPlacement::Output;
    if (!attend)
      return output_placement
                 ? frames_.back()
                 : add(matmul(outputs_.back(), model_->recon_W(), tape_), model_->recon_b(), tape_);
    Tensor<T> e = concat(scores_, tape_);
    if (model_->config().literal_attn_exp) e = exp(e, tape_);
    Tensor<T> context = softmax(e, tape_);
    if (output_placement) return weighted_sum(frames_, context, tape_);
    Tensor<T> attended = weighted_sum(outputs_, context, tape_);
    return add(matmul(attended, model_->recon_W(), tape_), model_->recon_b(), tape_);
  }

 private:
  const ForeseeModel<T>* model_;
  Tape<T>* tape_;
  std::vector<Tensor<T>> h_;
  std::vector<Tensor<T>> outputs_;
  std::vector<Tensor<T>> frames_;
  std::vector<Tensor<T>> scores_;
};

// All topmost-layer hidden states for a frame sequence, starting from zero
// state.
template <class T>
std::vector<Tensor<T>> encode_sequence(const ForeseeModel<T>& model,
                                       const std::vector<Tensor<T>>& frames,
                                       Tape<T>* tape = nullptr) {
  if (frames.empty()) throw ContractError("encode_sequence: empty sequence");
  ForeseeUnroll<T> unroll(model, tape);
  for (const auto& f : frames) unroll.step(f);
  return unroll.outputs();
}

// Inference-path next-frame prediction; the result is clamped to [0,1].
template <class T>
Tensor<T> predict_next_frame(const ForeseeModel<T>& model, const std::vector<Tensor<T>>& window) {
  if (static_cast<int>(window.size()) != model.config().seq_len)
    throw ContractError("predict_next_frame: window has " + std::to_string(window.size()) +
                        " frames, config.seq_len is " + std::to_string(model.config().seq_len));
  ForeseeUnroll<T> unroll(model, nullptr);
  for (const auto& f : window) unroll.step(f);
  return clamp01(unroll.predict(true));
}

// Recursive projection: predict, append, slide the window forward. Every
// re-fed frame is the clamped prediction.
template <class Model>
std::vector<Tensor<typename Model::scalar_type>> rollout(
    const Model& model, std::vector<Tensor<typename Model::scalar_type>> window, int horizon) {
  if (horizon < 1) throw ContractError("rollout: horizon must be >= 1");
  std::vector<Tensor<typename Model::scalar_type>> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int i = 0; i < horizon; ++i) {
    auto next = predict_next_frame(model, window);
    out.push_back(next);
    window.erase(window.begin());
    window.push_back(next);
  }
  return out;
}

// Baseline: the most recent observed frame, unchanged.
template <class T>
Tensor<T> copy_last_frame(const std::vector<Tensor<T>>& window) {
  if (window.empty()) throw ContractError("copy_last_frame: empty window");
  return window.back();
}

}  // namespace foresee
