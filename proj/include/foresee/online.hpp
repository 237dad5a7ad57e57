#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "foresee/checkpoint.hpp"
#include "foresee/errors.hpp"
#include "foresee/frames.hpp"
#include "foresee/metrics.hpp"
#include "foresee/model.hpp"
#include "foresee/optim.hpp"
#include "foresee/train.hpp"

namespace foresee {

// Frozen-vs-adapted comparison on one video, aggregated per horizon.
struct OnlineVideoReport {
  std::string video;
  long eval_points = 0;
  std::vector<double> frozen_mse, online_mse;            // indexed by horizon-1
  std::vector<double> frozen_ssim_x100, online_ssim_x100;

  // Captured rollouts of the first evaluation point, for montages.
  int first_t = -1;
};

template <class T>
struct OnlineFirstPoint {
  std::vector<Tensor<T>> target, frozen, online;
};

namespace detail {

// x'_0 = x_0;  x'_t = w*x_t + (1-w)*x_{t-1}.
template <class T>
std::vector<Tensor<T>> average_inputs(const std::vector<Tensor<T>>& frames, double weight) {
  std::vector<Tensor<T>> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i == 0) {
      out.push_back(frames[0]);
      continue;
    }
    Tensor<T> avg(frames[i].shape());
    const T w = static_cast<T>(weight);
    for (std::size_t k = 0; k < avg.size(); ++k)
      avg[k] = w * frames[i][k] + (T(1) - w) * frames[i - 1][k];
    out.push_back(avg);
  }
  return out;
}

// One MM-2-style pass over a short frame run: inputs frames[0..n-2] predict
// frames[1..n-1].
template <class T>
void online_training_pass(ForeseeModel<T>& model, const std::vector<Tensor<T>>& inputs,
                          const std::vector<Tensor<T>>& raw, Optimizer<T>& opt) {
  const bool attend_all = model.config().attn_steps == AttnSteps::All;
  const int steps = static_cast<int>(inputs.size()) - 1;
  Tape<T> tape;
  ForeseeUnroll<T> unroll(model, &tape);
  Tensor<T> total;
  for (int t = 0; t < steps; ++t) {
    unroll.step(inputs[t]);
    Tensor<T> pred = unroll.predict(attend_all || t == steps - 1);
    Tensor<T> loss = mse_loss(pred, raw[t + 1], &tape);
    total = t == 0 ? loss : add(total, loss, &tape);
  }
  total = scale(total, T(1) / static_cast<T>(steps), &tape);
  tape.backward(total);
  opt.step();
}

}  // namespace detail

// Online adaptation per §-style protocol: start from a fresh copy of the base
// model for the video, and at each evaluation time t retrain on the trailing
// window of observed frames before projecting `rollout_horizon` frames.
// Adaptation is cumulative across t within the video; the base model is never
// mutated. When input averaging is on, the GRU consumes averaged inputs during
// the online training passes; projections run on the raw window, so zero
// online epochs reproduce the frozen rollout exactly.
template <class T>
OnlineVideoReport online_adapt_and_project(const ForeseeModel<T>& base,
                                           const FrameSequence<T>& video, const TrainConfig& cfg,
                                           ImageDims dims, int eval_stride = 1,
                                           OnlineFirstPoint<T>* first_point = nullptr) {
  cfg.validate();
  const int seq_len = base.config().seq_len;
  const int horizon = cfg.rollout_horizon;
  const int window = cfg.online_window_frames;
  const int t0 = std::max(seq_len, window);
  const int minimum = t0 + horizon;
  if (static_cast<int>(video.size()) < minimum)
    throw ContractError("online_adapt_and_project: video '" + video.source_id + "' has " +
                        std::to_string(video.size()) + " frames, needs at least " +
                        std::to_string(minimum) + " (max(seq_len, online_window) + horizon)");
  if (eval_stride < 1) throw ContractError("online_adapt_and_project: eval_stride must be >= 1");

  ForeseeModel<T> adapted = base.clone();
  adapted.set_requires_grad(true);
  Optimizer<T> opt(cfg.optimizer, adapted.parameters(), static_cast<T>(cfg.learning_rate));

  OnlineVideoReport report;
  report.video = video.source_id;
  report.frozen_mse.assign(horizon, 0.0);
  report.online_mse.assign(horizon, 0.0);
  report.frozen_ssim_x100.assign(horizon, 0.0);
  report.online_ssim_x100.assign(horizon, 0.0);
  std::vector<KahanSum> fm(horizon), om(horizon), fs(horizon), os(horizon);

  for (int t = t0; t + horizon <= static_cast<int>(video.size()); t += eval_stride) {
    std::vector<Tensor<T>> trailing(video.frames.begin() + (t - window),
                                    video.frames.begin() + t);
    std::vector<Tensor<T>> inputs =
        cfg.online_input_averaging
            ? detail::average_inputs(trailing, cfg.input_average_weight)
            : trailing;
    for (int e = 0; e < cfg.online_epochs; ++e)
      detail::online_training_pass(adapted, inputs, trailing, opt);

    std::vector<Tensor<T>> proj_window(video.frames.begin() + (t - seq_len),
                                       video.frames.begin() + t);
    const std::vector<Tensor<T>> frozen = rollout(base, proj_window, horizon);
    const std::vector<Tensor<T>> online = rollout(adapted, proj_window, horizon);
    for (int h = 0; h < horizon; ++h) {
      const Tensor<T>& truth = video.frames[t + h];
      fm[h].add(mse_images(frozen[h], truth));
      om[h].add(mse_images(online[h], truth));
      fs[h].add(ssim(frozen[h], truth, dims));
      os[h].add(ssim(online[h], truth, dims));
    }
    if (report.eval_points == 0) {
      report.first_t = t;
      if (first_point) {
        first_point->target.assign(video.frames.begin() + t,
                                   video.frames.begin() + t + horizon);
        first_point->frozen = frozen;
        first_point->online = online;
      }
    }
    ++report.eval_points;
  }

  for (int h = 0; h < horizon; ++h) {
    report.frozen_mse[h] = fm[h].sum / report.eval_points;
    report.online_mse[h] = om[h].sum / report.eval_points;
    report.frozen_ssim_x100[h] = 100.0 * fs[h].sum / report.eval_points;
    report.online_ssim_x100[h] = 100.0 * os[h].sum / report.eval_points;
  }
  return report;
}

}  // namespace foresee
