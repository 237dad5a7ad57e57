#pragma once

#include <string>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/frames.hpp"

namespace foresee {

// One training/evaluation window. input holds seq_len frames starting at
// `start`; target holds the seq_len + horizon - 1 frames starting one frame
// later, so target[0..seq_len-1] are the one-step-shifted synced targets and
// target[seq_len-1..] are the decoded-horizon ground truth.
template <class T>
struct WindowPair {
  std::size_t start = 0;
  std::vector<Tensor<T>> input;
  std::vector<Tensor<T>> target;
};

inline std::size_t window_count(std::size_t video_len, int seq_len, int horizon) {
  const std::size_t need = static_cast<std::size_t>(seq_len) + horizon;
  return video_len >= need ? video_len - need + 1 : 0;
}

template <class T>
std::vector<WindowPair<T>> window_sequences(const FrameSequence<T>& video, int seq_len,
                                            int horizon) {
  if (seq_len < 1) throw ContractError("window_sequences: seq_len must be >= 1");
  if (horizon < 1) throw ContractError("window_sequences: horizon must be >= 1");
  const std::size_t count = window_count(video.size(), seq_len, horizon);
  if (count == 0)
    throw ContractError("window_sequences: video '" + video.source_id + "' has " +
                        std::to_string(video.size()) + " frames, needs at least " +
                        std::to_string(seq_len + horizon));
  std::vector<WindowPair<T>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    WindowPair<T> w;
    w.start = i;
    w.input.assign(video.frames.begin() + i, video.frames.begin() + i + seq_len);
    w.target.assign(video.frames.begin() + i + 1,
                    video.frames.begin() + i + seq_len + horizon);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace foresee
