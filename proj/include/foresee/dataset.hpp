#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/frames.hpp"
#include "foresee/png.hpp"
#include "foresee/rng.hpp"

namespace foresee {

template <class T>
struct DatasetSplit {
  std::vector<FrameSequence<T>> train, val, test;
};

// Whole-video split assignment with a seeded shuffle. Counts are assigned by
// largest remainder so they sum exactly to the video count.
template <class T>
DatasetSplit<T> split_dataset(const std::vector<FrameSequence<T>>& videos,
                              std::array<double, 3> ratios, std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (!(total > 0)) throw ContractError("split_dataset: ratios must sum to a positive value");
  for (auto& r : ratios) r /= total;

  const std::size_t n = videos.size();
  std::size_t required = 0;
  for (double r : ratios)
    if (r > 0) ++required;
  if (n < required)
    throw ContractError("split_dataset: " + std::to_string(n) + " videos cannot fill " +
                        std::to_string(required) + " non-empty splits");

  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double want = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(want));
    remainders[i] = want - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (remainders[i] > remainders[best]) best = i;
    ++counts[best];
    remainders[best] = -1;
    ++assigned;
  }
  // Guarantee at least one video in every split with positive ratio.
  for (int i = 0; i < 3; ++i) {
    if (ratios[i] > 0 && counts[i] == 0) {
      int donor = 0;
      for (int j = 1; j < 3; ++j)
        if (counts[j] > counts[donor]) donor = j;
      --counts[donor];
      ++counts[i];
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  DatasetSplit<T> out;
  std::size_t at = 0;
  for (std::size_t i = 0; i < counts[0]; ++i) out.train.push_back(videos[order[at++]]);
  for (std::size_t i = 0; i < counts[1]; ++i) out.val.push_back(videos[order[at++]]);
  for (std::size_t i = 0; i < counts[2]; ++i) out.test.push_back(videos[order[at++]]);
  return out;
}

inline std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.png", index);
  return buf;
}

// Writes a sequence as 8-bit PNGs named frame_000000.png, frame_000001.png, ...
template <class T>
void save_frames(const FrameSequence<T>& seq, const std::string& dir, int height, int width,
                 int channels) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const Image<T> img = tensor_to_image(seq.frames[i], width, height, channels);
    save_png(dir + "/" + frame_file_name(i), quantize_frame(img));
  }
}

// Loads a directory of frame_NNNNNN.png files, contiguous from 000000, and
// runs the preprocessing pipeline on each frame.
template <class T>
FrameSequence<T> load_frame_directory(const std::string& dir, const PipelineOptions& opts,
                                      double fps = 10.0) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw FormatError(dir + ": not a directory");

  std::map<std::size_t, std::string> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::size_t idx = 0;
    if (std::sscanf(name.c_str(), "frame_%6zu.png", &idx) == 1 &&
        name == frame_file_name(idx))
      found[idx] = entry.path().string();
  }
  if (found.empty()) throw FormatError(dir + ": no frame_NNNNNN.png files found");

  FrameSequence<T> seq;
  seq.fps = fps;
  seq.source_id = fs::path(dir).filename().string();
  std::size_t expect = 0;
  for (const auto& [idx, path] : found) {
    if (idx != expect)
      throw FormatError(dir + ": missing " + frame_file_name(expect));
    Image<std::uint8_t> raw;
    try {
      raw = load_png(path);
    } catch (const FormatError& e) {
      throw FormatError(std::string("cannot decode ") + e.what());
    }
    seq.frames.push_back(preprocess_frame<T>(raw, opts));
    ++expect;
  }
  return seq;
}

// On-disk dataset layout: root/<video>/frame_NNNNNN.png plus a split manifest
// at root/splits.tsv with lines "split<TAB>videoname".
template <class T>
void save_dataset(const std::string& root,
                  const std::vector<std::pair<std::string, const FrameSequence<T>*>>& assignment,
                  int height, int width, int channels) {
  std::filesystem::create_directories(root);
  std::ofstream manifest(root + "/splits.tsv", std::ios::trunc);
  if (!manifest) throw FormatError(root + "/splits.tsv: cannot write");
  for (const auto& [split, seq] : assignment) {
    save_frames(*seq, root + "/" + seq->source_id, height, width, channels);
    manifest << split << "\t" << seq->source_id << "\n";
  }
}

template <class T>
DatasetSplit<T> load_dataset(const std::string& root, const PipelineOptions& opts) {
  const std::string manifest_path = root + "/splits.tsv";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw FormatError(manifest_path + ": cannot open split manifest");
  DatasetSplit<T> out;
  std::string line;
  int line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError(manifest_path + ":" + std::to_string(line_no) +
                        ": expected split<TAB>videoname");
    const std::string split = line.substr(0, tab);
    const std::string video = line.substr(tab + 1);
    FrameSequence<T> seq = load_frame_directory<T>(root + "/" + video, opts);
    if (split == "train")
      out.train.push_back(std::move(seq));
    else if (split == "val")
      out.val.push_back(std::move(seq));
    else if (split == "test")
      out.test.push_back(std::move(seq));
    else
      throw FormatError(manifest_path + ":" + std::to_string(line_no) + ": unknown split '" +
                        split + "'");
  }
  if (out.train.empty() && out.val.empty() && out.test.empty())
    throw FormatError(manifest_path + ": manifest lists no videos");
  return out;
}

}  // namespace foresee
