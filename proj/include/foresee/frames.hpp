#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

struct ImageDims {
  int height = 32;
  int width = 32;
  int channels = 3;
};

// Interleaved row-major raster, the working representation of the
// preprocessing pipeline.
template <class T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> pix;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c) {
    pix.assign(static_cast<std::size_t>(w) * h * c, T(0));
  }

  T& at(int x, int y, int c) {
    return pix[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  T at(int x, int y, int c) const {
    return pix[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// One video clip after preprocessing: ordered frames, each a flat tensor of
// input_dim values in [0,1].
template <class T>
struct FrameSequence {
  std::vector<Tensor<T>> frames;
  double fps = 10.0;
  std::string source_id;

  std::size_t size() const { return frames.size(); }
};

// 8-bit raster to [0,1].
template <class T>
Image<T> normalize_frame(const Image<std::uint8_t>& raw) {
  Image<T> out(raw.width, raw.height, raw.channels);
  for (std::size_t i = 0; i < raw.pix.size(); ++i)
    out.pix[i] = static_cast<T>(raw.pix[i]) / T(255);
  return out;
}

// v -> v^gamma elementwise; gamma < 1 brightens.
template <class T>
void gamma_correct(Image<T>& img, double gamma) {
  if (!(gamma > 0)) throw ContractError("gamma_correct: gamma must be positive");
  if (gamma == 1.0) return;
  for (T& v : img.pix) v = static_cast<T>(std::pow(static_cast<double>(v), gamma));
}

// Corner-aligned bilinear resampling.
template <class T>
Image<T> resize_bilinear(const Image<T>& src, int out_h, int out_w) {
  if (src.width == out_w && src.height == out_h) return src;
  Image<T> out(out_w, out_h, src.channels);
  const double sx = out_w > 1 ? static_cast<double>(src.width - 1) / (out_w - 1) : 0.0;
  const double sy = out_h > 1 ? static_cast<double>(src.height - 1) / (out_h - 1) : 0.0;
  for (int y = 0; y < out_h; ++y) {
    const double fy = y * sy;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = x * sx;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = (1.0 - wx) * src.at(x0, y0, c) + wx * src.at(x1, y0, c);
        const double bot = (1.0 - wx) * src.at(x0, y1, c) + wx * src.at(x1, y1, c);
        out.at(x, y, c) = static_cast<T>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> image_to_tensor(const Image<T>& img) {
  return Tensor<T>(Shape{img.pix.size()}, img.pix);
}

template <class T>
Image<T> tensor_to_image(const Tensor<T>& t, int w, int h, int c) {
  if (t.size() != static_cast<std::size_t>(w) * h * c)
    throw DimensionError("tensor_to_image: " + shape_str(t.shape()) + " is not " +
                         std::to_string(w) + "x" + std::to_string(h) + "x" + std::to_string(c));
  Image<T> img(w, h, c);
  img.pix = t.values();
  return img;
}

// Clamp to [0,1] and quantize to 8 bits, rounding half up.
template <class T>
Image<std::uint8_t> quantize_frame(const Image<T>& img) {
  Image<std::uint8_t> out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.pix.size(); ++i) {
    const double v = std::min(1.0, std::max(0.0, static_cast<double>(img.pix[i])));
    out.pix[i] = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
  }
  return out;
}

struct PipelineOptions {
  double gamma = 0.45;
  int target_height = 32;
  int target_width = 32;
};

// normalize -> gamma-correct -> resize, then flatten.
template <class T>
Tensor<T> preprocess_frame(const Image<std::uint8_t>& raw, const PipelineOptions& opts) {
  Image<T> img = normalize_frame<T>(raw);
  gamma_correct(img, opts.gamma);
  img = resize_bilinear(img, opts.target_height, opts.target_width);
  return image_to_tensor(img);
}

}  // namespace foresee
