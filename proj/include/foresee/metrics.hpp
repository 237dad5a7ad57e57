#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/frames.hpp"
#include "foresee/model.hpp"
#include "foresee/tensor.hpp"
#include "foresee/windows.hpp"

namespace foresee {

// Compensated summation so aggregates do not depend on accumulation order
// noise at float precision.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// Evaluation-side mean squared error (same formula as the training loss,
// computed in double, no gradient).
template <class T>
double mse_images(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw DimensionError("mse_images: shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  KahanSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc.add(d * d);
  }
  return acc.sum / static_cast<double>(a.size());
}

namespace detail {

inline std::vector<int> ssim_window_origins(int extent, int win, int stride) {
  std::vector<int> out;
  for (int p = 0; p + win <= extent; p += stride) out.push_back(p);
  if (out.empty() || out.back() != extent - win) out.push_back(extent - win);
  return out;
}

}  // namespace detail

// Windowed SSIM on [0,1] images: 8x8 uniform windows with stride 4,
// C1 = (0.01 L)^2 and C2 = (0.03 L)^2 with L = 1, computed per channel and
// averaged. Result is in [-1, 1]; reports scale it by 100.
template <class T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, ImageDims dims) {
  if (a.shape() != b.shape())
    throw DimensionError("ssim: shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  const std::size_t expect =
      static_cast<std::size_t>(dims.height) * dims.width * dims.channels;
  if (a.size() != expect)
    throw DimensionError("ssim: tensor " + shape_str(a.shape()) + " is not " +
                         std::to_string(dims.width) + "x" + std::to_string(dims.height) + "x" +
                         std::to_string(dims.channels));

  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const int win_h = std::min(8, dims.height);
  const int win_w = std::min(8, dims.width);
  const auto ys = detail::ssim_window_origins(dims.height, win_h, 4);
  const auto xs = detail::ssim_window_origins(dims.width, win_w, 4);
  const double inv_n = 1.0 / static_cast<double>(win_h * win_w);

  KahanSum channel_acc;
  for (int ch = 0; ch < dims.channels; ++ch) {
    KahanSum window_acc;
    for (int wy : ys) {
      for (int wx : xs) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int y = wy; y < wy + win_h; ++y) {
          for (int x = wx; x < wx + win_w; ++x) {
            const std::size_t idx =
                (static_cast<std::size_t>(y) * dims.width + x) * dims.channels + ch;
            const double va = static_cast<double>(a[idx]);
            const double vb = static_cast<double>(b[idx]);
            sx += va;
            sy += vb;
            sxx += va * va;
            syy += vb * vb;
            sxy += va * vb;
          }
        }
        const double mx = sx * inv_n, my = sy * inv_n;
        const double vx = std::max(0.0, sxx * inv_n - mx * mx);
        const double vy = std::max(0.0, syy * inv_n - my * my);
        const double cov = sxy * inv_n - mx * my;
        const double num = (2.0 * mx * my + kC1) * (2.0 * cov + kC2);
        const double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
        window_acc.add(num / den);
      }
    }
    channel_acc.add(window_acc.sum / static_cast<double>(ys.size() * xs.size()));
  }
  return channel_acc.sum / static_cast<double>(dims.channels);
}

struct MetricsReport {
  struct Row {
    int horizon = 0;
    double mse = 0.0;
    double ssim_x100 = 0.0;
    long windows = 0;
  };
  struct VideoRow {
    std::string video;
    int horizon = 0;
    double mse = 0.0;
    double ssim_x100 = 0.0;
    long windows = 0;
  };
  std::vector<Row> overall;       // one row per horizon 1..H
  std::vector<VideoRow> per_video;

  long windows() const { return overall.empty() ? 0 : overall.front().windows; }
};

template <class T>
using RolloutFn =
    std::function<std::vector<Tensor<T>>(const std::vector<Tensor<T>>&, int horizon)>;

template <class Model>
RolloutFn<typename Model::scalar_type> model_rollout_fn(const Model& model) {
  return [&model](const std::vector<Tensor<typename Model::scalar_type>>& window, int horizon) {
    return rollout(model, window, horizon);
  };
}

template <class T>
RolloutFn<T> copy_last_rollout_fn() {
  return [](const std::vector<Tensor<T>>& window, int horizon) {
    std::vector<Tensor<T>> out(static_cast<std::size_t>(horizon),
                               copy_last_frame(window));
    return out;
  };
}

// Exhaustive stride-1 evaluation: every length-seq_len window of every video,
// rolled out `horizon` frames and scored per horizon against ground truth.
template <class T>
MetricsReport evaluate(const RolloutFn<T>& rollout_fn, const std::vector<FrameSequence<T>>& videos,
                       int seq_len, int horizon, ImageDims dims) {
  if (horizon < 1) throw ContractError("evaluate: horizon must be >= 1");
  struct Acc {
    KahanSum mse, ssim;
    long n = 0;
  };
  std::vector<Acc> total(static_cast<std::size_t>(horizon));
  MetricsReport report;

  for (const auto& video : videos) {
    const std::size_t count = window_count(video.size(), seq_len, horizon);
    std::vector<Acc> per(static_cast<std::size_t>(horizon));
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<Tensor<T>> window(video.frames.begin() + i,
                                    video.frames.begin() + i + seq_len);
      const std::vector<Tensor<T>> predicted = rollout_fn(window, horizon);
      for (int h = 0; h < horizon; ++h) {
        const Tensor<T>& truth = video.frames[i + seq_len + h];
        const double m = mse_images(predicted[h], truth);
        const double s = ssim(predicted[h], truth, dims);
        per[h].mse.add(m);
        per[h].ssim.add(s);
        ++per[h].n;
        total[h].mse.add(m);
        total[h].ssim.add(s);
        ++total[h].n;
      }
    }
    for (int h = 0; h < horizon; ++h) {
      if (per[h].n == 0) continue;
      MetricsReport::VideoRow row;
      row.video = video.source_id;
      row.horizon = h + 1;
      row.mse = per[h].mse.sum / per[h].n;
      row.ssim_x100 = 100.0 * per[h].ssim.sum / per[h].n;
      row.windows = per[h].n;
      report.per_video.push_back(row);
    }
  }

  if (total[0].n == 0)
    throw ContractError("evaluate: no video long enough for seq_len " + std::to_string(seq_len) +
                        " + horizon " + std::to_string(horizon));
  for (int h = 0; h < horizon; ++h) {
    MetricsReport::Row row;
    row.horizon = h + 1;
    row.mse = total[h].mse.sum / total[h].n;
    row.ssim_x100 = 100.0 * total[h].ssim.sum / total[h].n;
    row.windows = total[h].n;
    report.overall.push_back(row);
  }
  return report;
}

inline void write_report_csv(const std::string& path,
                             const std::vector<std::pair<std::string, MetricsReport>>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot write report");
  out << "approach,horizon,mse,ssim_x100,windows\n";
  char buf[64];
  for (const auto& [approach, report] : reports) {
    for (const auto& row : report.overall) {
      std::snprintf(buf, sizeof buf, "%.9g", row.mse);
      out << approach << "," << row.horizon << "," << buf << ",";
      std::snprintf(buf, sizeof buf, "%.6f", row.ssim_x100);
      out << buf << "," << row.windows << "\n";
    }
  }
}

inline void write_per_video_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, MetricsReport>>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot write report");
  out << "approach,video,horizon,mse,ssim_x100,windows\n";
  char buf[64];
  for (const auto& [approach, report] : reports) {
    for (const auto& row : report.per_video) {
      std::snprintf(buf, sizeof buf, "%.9g", row.mse);
      out << approach << "," << row.video << "," << row.horizon << "," << buf << ",";
      std::snprintf(buf, sizeof buf, "%.6f", row.ssim_x100);
      out << buf << "," << row.windows << "\n";
    }
  }
}

}  // namespace foresee
