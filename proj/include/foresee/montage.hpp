#pragma once

#include <algorithm>
#include <vector>

#include "foresee/frames.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

// Tiles rows of frames into one 8-bit image (one labeled strip per row, e.g.
// targets above predictions), with a light gutter between cells and at most
// `max_cols` frames per row.
template <class T>
Image<std::uint8_t> build_montage(const std::vector<std::vector<Tensor<T>>>& rows, ImageDims dims,
                                  int max_cols = 10) {
  constexpr int kGutter = 2;
  std::size_t cols = 0;
  for (const auto& row : rows) cols = std::max(cols, row.size());
  cols = std::min<std::size_t>(cols, static_cast<std::size_t>(std::max(1, max_cols)));
  const int out_w = static_cast<int>(cols) * (dims.width + kGutter) + kGutter;
  const int out_h = static_cast<int>(rows.size()) * (dims.height + kGutter) + kGutter;

  Image<std::uint8_t> out(out_w, out_h, 3);
  std::fill(out.pix.begin(), out.pix.end(), std::uint8_t(32));

  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < std::min(cols, rows[r].size()); ++c) {
      const Image<T> cell = tensor_to_image(rows[r][c], dims.width, dims.height, dims.channels);
      const Image<std::uint8_t> q = quantize_frame(cell);
      const int ox = kGutter + static_cast<int>(c) * (dims.width + kGutter);
      const int oy = kGutter + static_cast<int>(r) * (dims.height + kGutter);
      for (int y = 0; y < dims.height; ++y)
        for (int x = 0; x < dims.width; ++x)
          for (int ch = 0; ch < 3; ++ch)
            out.at(ox + x, oy + y, ch) = q.at(x, y, ch % dims.channels);
    }
  }
  return out;
}

}  // namespace foresee
