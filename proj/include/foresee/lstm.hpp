#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "foresee/model.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

// One LSTM layer, same row-vector convention as the GRU layers.
template <class T>
struct LstmLayerParams {
  Tensor<T> W_ii, W_if, W_ig, W_io;
  Tensor<T> W_hi, W_hf, W_hg, W_ho;
  Tensor<T> b_ii, b_if, b_ig, b_io;
  Tensor<T> b_hi, b_hf, b_hg, b_ho;

  LstmLayerParams() = default;

  LstmLayerParams(std::size_t input_width, std::size_t hidden, Rng& rng)
      : W_ii(detail::init_weight<T>(input_width, hidden, rng)),
        W_if(detail::init_weight<T>(input_width, hidden, rng)),
        W_ig(detail::init_weight<T>(input_width, hidden, rng)),
        W_io(detail::init_weight<T>(input_width, hidden, rng)),
        W_hi(detail::init_weight<T>(hidden, hidden, rng)),
        W_hf(detail::init_weight<T>(hidden, hidden, rng)),
        W_hg(detail::init_weight<T>(hidden, hidden, rng)),
        W_ho(detail::init_weight<T>(hidden, hidden, rng)),
        b_ii(Shape{hidden}),
        b_if(Shape{hidden}),
        b_ig(Shape{hidden}),
        b_io(Shape{hidden}),
        b_hi(Shape{hidden}),
        b_hf(Shape{hidden}),
        b_hg(Shape{hidden}),
        b_ho(Shape{hidden}) {}

  std::size_t hidden_size() const { return W_ii.dim(1); }
};

template <class T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

// i = sigmoid(x W_ii + b_ii + h W_hi + b_hi)      f, o analogous
// g = tanh(x W_ig + b_ig + h W_hg + b_hg)
// c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
template <class T>
LstmState<T> lstm_cell_step(const LstmLayerParams<T>& p, const Tensor<T>& x,
                            const LstmState<T>& prev, Tape<T>* tape = nullptr) {
  Tensor<T> i = sigmoid(add(add(matmul(x, p.W_ii, tape), p.b_ii, tape),
                            add(matmul(prev.h, p.W_hi, tape), p.b_hi, tape), tape),
                        tape);
  Tensor<T> f = sigmoid(add(add(matmul(x, p.W_if, tape), p.b_if, tape),
                            add(matmul(prev.h, p.W_hf, tape), p.b_hf, tape), tape),
                        tape);
  Tensor<T> g = tanh(add(add(matmul(x, p.W_ig, tape), p.b_ig, tape),
                         add(matmul(prev.h, p.W_hg, tape), p.b_hg, tape), tape),
                     tape);
  Tensor<T> o = sigmoid(add(add(matmul(x, p.W_io, tape), p.b_io, tape),
                            add(matmul(prev.h, p.W_ho, tape), p.b_ho, tape), tape),
                        tape);
  LstmState<T> out;
  out.c = add(mul(f, prev.c, tape), mul(i, g, tape), tape);
  out.h = mul(o, tanh(out.c, tape), tape);
  return out;
}

// Comparison baseline: stacked LSTM encoder whose last hidden state is
// reconstructed to a frame through a fully connected layer. No attention.
template <class T>
class EncDecLstm {
 public:
  using scalar_type = T;

  EncDecLstm(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const auto hidden = static_cast<std::size_t>(cfg_.hidden_size);
    const auto in_dim = static_cast<std::size_t>(cfg_.input_dim);
    for (int l = 0; l < cfg_.num_layers; ++l)
      layers_.emplace_back(l == 0 ? in_dim : hidden, hidden, rng);
    recon_W_ = detail::init_weight<T>(hidden, in_dim, rng);
    recon_b_ = Tensor<T>(Shape{in_dim});
  }

  const ModelConfig& config() const { return cfg_; }
  std::vector<LstmLayerParams<T>>& layers() { return layers_; }
  const std::vector<LstmLayerParams<T>>& layers() const { return layers_; }
  Tensor<T>& recon_W() { return recon_W_; }
  Tensor<T>& recon_b() { return recon_b_; }
  const Tensor<T>& recon_W() const { return recon_W_; }
  const Tensor<T>& recon_b() const { return recon_b_; }

  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::string prefix = "lstm" + std::to_string(l) + ".";
      const LstmLayerParams<T>& p = layers_[l];
      out.emplace_back(prefix + "W_ii", p.W_ii);
      out.emplace_back(prefix + "W_if", p.W_if);
      out.emplace_back(prefix + "W_ig", p.W_ig);
      out.emplace_back(prefix + "W_io", p.W_io);
      out.emplace_back(prefix + "W_hi", p.W_hi);
      out.emplace_back(prefix + "W_hf", p.W_hf);
      out.emplace_back(prefix + "W_hg", p.W_hg);
      out.emplace_back(prefix + "W_ho", p.W_ho);
      out.emplace_back(prefix + "b_ii", p.b_ii);
      out.emplace_back(prefix + "b_if", p.b_if);
      out.emplace_back(prefix + "b_ig", p.b_ig);
      out.emplace_back(prefix + "b_io", p.b_io);
      out.emplace_back(prefix + "b_hi", p.b_hi);
      out.emplace_back(prefix + "b_hf", p.b_hf);
      out.emplace_back(prefix + "b_hg", p.b_hg);
      out.emplace_back(prefix + "b_ho", p.b_ho);
    }
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
      Tensor<T> copy = t;
      copy.set_requires_grad(on);
    }
  }

 private:
  ModelConfig cfg_;
  std::vector<LstmLayerParams<T>> layers_;
  Tensor<T> recon_W_;
  Tensor<T> recon_b_;
};

template <class T>
class LstmUnroll {
 public:
  LstmUnroll(const EncDecLstm<T>& model, Tape<T>* tape) : model_(&model), tape_(tape) {
    const auto hidden = static_cast<std::size_t>(model.config().hidden_size);
    for (int l = 0; l < model.config().num_layers; ++l)
      states_.push_back({Tensor<T>(Shape{hidden}), Tensor<T>(Shape{hidden})});
  }

  void step(const Tensor<T>& x) {
    if (x.size() != static_cast<std::size_t>(model_->config().input_dim))
      throw DimensionError("lstm step: frame " + shape_str(x.shape()) + " vs input_dim " +
                           std::to_string(model_->config().input_dim));
    Tensor<T> cur = x;
    for (std::size_t l = 0; l < states_.size(); ++l) {
      states_[l] = lstm_cell_step(model_->layers()[l], cur, states_[l], tape_);
      cur = states_[l].h;
    }
    last_ = cur;
    ++steps_;
  }

  int steps() const { return steps_; }

  Tensor<T> predict(bool /*attend*/) {
    if (steps_ == 0) throw ContractError("lstm predict: no steps consumed");
    return add(matmul(last_, model_->recon_W(), tape_), model_->recon_b(), tape_);
  }

 private:
  const EncDecLstm<T>* model_;
  Tape<T>* tape_;
  std::vector<LstmState<T>> states_;
  Tensor<T> last_;
  int steps_ = 0;
};

template <class T>
Tensor<T> encdec_lstm_predict(const EncDecLstm<T>& model, const std::vector<Tensor<T>>& window) {
  if (static_cast<int>(window.size()) != model.config().seq_len)
    throw ContractError("encdec_lstm_predict: window has " + std::to_string(window.size()) +
                        " frames, config.seq_len is " + std::to_string(model.config().seq_len));
  LstmUnroll<T> unroll(model, nullptr);
  for (const auto& f : window) unroll.step(f);
  return clamp01(unroll.predict(false));
}

// Lets the generic rollout work for the baseline as well.
template <class T>
Tensor<T> predict_next_frame(const EncDecLstm<T>& model, const std::vector<Tensor<T>>& window) {
  return encdec_lstm_predict(model, window);
}

}  // namespace foresee
