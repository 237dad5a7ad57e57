#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/frames.hpp"
#include "foresee/model.hpp"
#include "foresee/optim.hpp"
#include "foresee/rng.hpp"
#include "foresee/tensor.hpp"
#include "foresee/windows.hpp"

namespace foresee {

enum class TrainVariant { MM1, MM2 };

inline const char* to_string(TrainVariant v) { return v == TrainVariant::MM1 ? "mm1" : "mm2"; }

struct TrainConfig {
  TrainVariant variant = TrainVariant::MM2;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  int epochs = 1;
  std::uint64_t seed = 0;
  int rollout_horizon = 5;        // MM-1 decode length and online projection length
  int val_interval = 0;           // optimizer steps between val evaluations; 0 = epoch end only
  int max_windows_per_epoch = 0;  // 0 = all windows (nonzero for reduced sweep runs)
  int max_val_windows = 0;        // 0 = all

  bool online = false;
  int online_window_frames = 10;  // 1 s at 10 FPS
  int online_epochs = 5;
  bool online_input_averaging = true;
  double input_average_weight = 0.5;

  void validate() const {
    if (!(learning_rate >= 0)) throw ContractError("train config: learning_rate must be >= 0");
    if (epochs < 1) throw ContractError("train config: epochs must be >= 1");
    if (rollout_horizon < 1) throw ContractError("train config: rollout_horizon must be >= 1");
    if (online_window_frames < 2)
      throw ContractError("train config: online_window_frames must be >= 2");
    if (online_epochs < 0) throw ContractError("train config: online_epochs must be >= 0");
  }
};

struct LossHistoryRow {
  long step = 0;
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  bool has_val = false;
};

struct TrainResult {
  std::vector<LossHistoryRow> history;
  double final_train_mse = 0.0;
  double final_val_mse = 0.0;
  bool has_val = false;
};

// Maps a model type to its unrolled-execution type.
template <class Model>
struct ModelUnroll;

template <class T>
struct ModelUnroll<ForeseeModel<T>> {
  using type = ForeseeUnroll<T>;
};

template <class T>
class EncDecLstm;
template <class T>
class LstmUnroll;

template <class T>
struct ModelUnroll<EncDecLstm<T>> {
  using type = LstmUnroll<T>;
};

namespace detail {

template <class T>
struct WindowRef {
  const FrameSequence<T>* video;
  std::size_t start;
};

template <class T>
std::vector<WindowRef<T>> collect_windows(const std::vector<FrameSequence<T>>& videos,
                                          int seq_len, int horizon) {
  std::vector<WindowRef<T>> out;
  for (const auto& v : videos) {
    const std::size_t n = window_count(v.size(), seq_len, horizon);
    for (std::size_t i = 0; i < n; ++i) out.push_back({&v, i});
  }
  return out;
}

// Per-step synced loss: at every encoder step t the model predicts frame
// t+1 against the ground-truth next frame. Attention participates at every
// step (All) or only at the final one (Last).
template <class Model, class T = typename Model::scalar_type>
Tensor<T> mm2_window_loss(const Model& model, const WindowRef<T>& w, Tape<T>& tape) {
  const int seq_len = model.config().seq_len;
  const bool attend_all = model.config().attn_steps == AttnSteps::All;
  typename ModelUnroll<Model>::type unroll(model, &tape);
  Tensor<T> total;
  for (int t = 0; t < seq_len; ++t) {
    unroll.step(w.video->frames[w.start + t]);
    Tensor<T> pred = unroll.predict(attend_all || t == seq_len - 1);
    Tensor<T> loss = mse_loss(pred, w.video->frames[w.start + t + 1], &tape);
    total = t == 0 ? loss : add(total, loss, &tape);
  }
  return scale(total, T(1) / static_cast<T>(seq_len), &tape);
}

// Decoded-horizon loss: encode the input window, then decode `horizon`
// frames recursively, re-feeding each clamped prediction, with loss on the
// decoded frames only.
template <class Model, class T = typename Model::scalar_type>
Tensor<T> mm1_window_loss(const Model& model, const WindowRef<T>& w, int horizon, Tape<T>& tape) {
  const int seq_len = model.config().seq_len;
  const bool attend_all = model.config().attn_steps == AttnSteps::All;
  typename ModelUnroll<Model>::type unroll(model, &tape);
  for (int t = 0; t < seq_len; ++t) unroll.step(w.video->frames[w.start + t]);
  Tensor<T> total;
  for (int d = 0; d < horizon; ++d) {
    Tensor<T> pred = unroll.predict(attend_all || d == horizon - 1);
    Tensor<T> loss = mse_loss(pred, w.video->frames[w.start + seq_len + d], &tape);
    total = d == 0 ? loss : add(total, loss, &tape);
    if (d + 1 < horizon) unroll.step(clamp01(pred, &tape));
  }
  return scale(total, T(1) / static_cast<T>(horizon), &tape);
}

}  // namespace detail

// Mean next-frame MSE of the inference path over exhaustive windows.
template <class Model, class T = typename Model::scalar_type>
double validation_mse(const Model& model, const std::vector<FrameSequence<T>>& videos,
                      int max_windows = 0) {
  const int seq_len = model.config().seq_len;
  double acc = 0.0, comp = 0.0;
  long count = 0;
  for (const auto& v : videos) {
    const std::size_t n = window_count(v.size(), seq_len, 1);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Tensor<T>> window(v.frames.begin() + i, v.frames.begin() + i + seq_len);
      Tensor<T> pred = predict_next_frame(model, window);
      const Tensor<T>& truth = v.frames[i + seq_len];
      double sq = 0.0;
      for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = static_cast<double>(pred[k]) - static_cast<double>(truth[k]);
        sq += d * d;
      }
      const double term = sq / static_cast<double>(pred.size()) - comp;
      const double sum = acc + term;
      comp = (sum - acc) - term;
      acc = sum;
      ++count;
      if (max_windows > 0 && count >= max_windows) break;
    }
    if (max_windows > 0 && count >= max_windows) break;
  }
  if (count == 0) throw ContractError("validation_mse: no windows");
  return acc / static_cast<double>(count);
}

// Shared epoch loop for both variants. One optimizer step per window; window
// order reshuffled every epoch from the config seed.
template <class Model, class T = typename Model::scalar_type>
TrainResult train(Model& model, const std::vector<FrameSequence<T>>& train_videos,
                  const std::vector<FrameSequence<T>>& val_videos, const TrainConfig& cfg) {
  cfg.validate();
  const int horizon = cfg.variant == TrainVariant::MM1 ? cfg.rollout_horizon : 1;
  auto windows = detail::collect_windows(train_videos, model.config().seq_len, horizon);
  if (windows.empty())
    throw ContractError("train: dataset holds no windows of seq_len " +
                        std::to_string(model.config().seq_len) + " + horizon " +
                        std::to_string(horizon));

  model.set_requires_grad(true);
  Optimizer<T> opt(cfg.optimizer, model.parameters(), static_cast<T>(cfg.learning_rate));

  TrainResult result;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5a5a0000ULL + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(windows);
    std::size_t limit = windows.size();
    if (cfg.max_windows_per_epoch > 0)
      limit = std::min(limit, static_cast<std::size_t>(cfg.max_windows_per_epoch));
    for (std::size_t i = 0; i < limit; ++i) {
      Tape<T> tape;
      Tensor<T> loss = cfg.variant == TrainVariant::MM2
                           ? detail::mm2_window_loss(model, windows[i], tape)
                           : detail::mm1_window_loss(model, windows[i], cfg.rollout_horizon, tape);
      tape.backward(loss);
      opt.step();
      ++step;

      LossHistoryRow row;
      row.step = step;
      row.epoch = epoch;
      row.train_mse = static_cast<double>(loss.item());
      const bool epoch_end = i + 1 == limit;
      if (!val_videos.empty() &&
          ((cfg.val_interval > 0 && step % cfg.val_interval == 0) ||
           (epoch_end && epoch + 1 == cfg.epochs))) {
        row.val_mse = validation_mse(model, val_videos, cfg.max_val_windows);
        row.has_val = true;
        result.final_val_mse = row.val_mse;
        result.has_val = true;
      }
      result.final_train_mse = row.train_mse;
      result.history.push_back(row);
    }
  }
  return result;
}

template <class Model, class T = typename Model::scalar_type>
TrainResult train_mm2(Model& model, const std::vector<FrameSequence<T>>& train_videos,
                      const std::vector<FrameSequence<T>>& val_videos, const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.variant = TrainVariant::MM2;
  return train(model, train_videos, val_videos, c);
}

template <class Model, class T = typename Model::scalar_type>
TrainResult train_mm1(Model& model, const std::vector<FrameSequence<T>>& train_videos,
                      const std::vector<FrameSequence<T>>& val_videos, const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.variant = TrainVariant::MM1;
  return train(model, train_videos, val_videos, c);
}

inline void write_loss_history_csv(const std::string& path,
                                   const std::vector<LossHistoryRow>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot write loss history");
  out << "step,epoch,train_mse,val_mse\n";
  char buf[64];
  for (const auto& row : history) {
    out << row.step << "," << row.epoch << ",";
    std::snprintf(buf, sizeof buf, "%.9g", row.train_mse);
    out << buf << ",";
    if (row.has_val) {
      std::snprintf(buf, sizeof buf, "%.9g", row.val_mse);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace foresee
