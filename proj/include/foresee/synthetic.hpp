#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/frames.hpp"
#include "foresee/rng.hpp"

namespace foresee {

enum class BackgroundMode { Solid, Gradient, Textured };

inline const char* to_string(BackgroundMode m) {
  switch (m) {
    case BackgroundMode::Solid: return "solid";
    case BackgroundMode::Gradient: return "gradient";
    default: return "textured";
  }
}

// Stand-in for a real chaotic-motion corpus: colored sprites wander over a
// static background, bouncing off the canvas edges and occasionally picking
// a new random direction.
struct SyntheticSceneConfig {
  int num_videos = 20;
  int frames_per_video = 200;
  int canvas_height = 32;
  int canvas_width = 32;
  int channels = 3;
  int num_sprites = 2;
  double sprite_min_size = 8.0;
  double sprite_max_size = 14.0;
  double speed_min = 5.0;    // px/frame
  double speed_max = 8.0;
  double direction_change_probability = 0.2;
  BackgroundMode background = BackgroundMode::Gradient;
  std::uint64_t seed = 1;
  double fps = 10.0;
  // Set by callers that will assert on frame-to-frame motion.
  bool require_motion = false;
  std::array<double, 3> split_ratios = {55.0 / 101.0, 22.0 / 101.0, 24.0 / 101.0};

  void validate() const {
    if (num_videos < 1) throw ContractError("synthetic config: num_videos must be >= 1");
    if (frames_per_video < 1)
      throw ContractError("synthetic config: frames_per_video must be >= 1");
    if (num_sprites < 0) throw ContractError("synthetic config: num_sprites must be >= 0");
    if (direction_change_probability < 0.0 || direction_change_probability > 1.0)
      throw ContractError("synthetic config: direction_change_probability must be in [0,1]");
    if (speed_min < 0.0 || speed_max < speed_min)
      throw ContractError("synthetic config: bad speed range");
    if (sprite_min_size <= 0.0 || sprite_max_size < sprite_min_size)
      throw ContractError("synthetic config: bad sprite size range");
    if (require_motion && (num_sprites == 0 || speed_max == 0.0))
      throw ContractError("synthetic config: motion requested but scene cannot move "
                          "(num_sprites or speed is zero)");
  }
};

namespace detail {

struct Sprite {
  bool disc = false;
  double x = 0, y = 0;
  double vx = 0, vy = 0;
  double speed = 0;
  double half_w = 0, half_h = 0;
  std::array<double, 3> color{};
};

// Static per-pixel hash pattern for the textured background.
inline double texture_value(int x, int y, int c, std::uint64_t salt) {
  std::uint64_t h = salt ^ (std::uint64_t(x) * 0x9e3779b97f4a7c15ULL) ^
                    (std::uint64_t(y) * 0xc2b2ae3d27d4eb4fULL) ^ (std::uint64_t(c) << 32);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return 0.25 + 0.5 * (static_cast<double>(h >> 11) * 0x1.0p-53);
}

}  // namespace detail

// Deterministic function of (cfg, video_index): the same arguments always
// produce bit-identical frames. Scene appearance (background, sprite color
// palette) derives from the config seed alone so every video in a dataset
// shares it, like clips from one camera in one world; trajectories, sizes
// and shapes are per-video.
template <class T>
FrameSequence<T> generate_synthetic_video(const SyntheticSceneConfig& cfg, int video_index) {
  cfg.validate();
  const int w = cfg.canvas_width, h = cfg.canvas_height, ch = cfg.channels;

  Rng appearance(derive_seed(cfg.seed, 0xa99ea7ULL));
  std::array<double, 3> bg0{}, bg1{};
  for (int c = 0; c < 3; ++c) {
    bg0[c] = appearance.next_real(0.1, 0.9);
    bg1[c] = appearance.next_real(0.1, 0.9);
  }
  const std::uint64_t texture_salt = appearance.next_u64();
  constexpr int kPaletteSize = 6;
  std::array<std::array<double, 3>, kPaletteSize> palette{};
  const double mid_bg = (bg0[0] + bg0[1] + bg0[2]) / 3.0;
  for (auto& color : palette) {
    for (int c = 0; c < 3; ++c) color[c] = appearance.next_real();
    // Keep sprites visible against a solid background.
    const double mid = (color[0] + color[1] + color[2]) / 3.0;
    if (std::abs(mid_bg - mid) < 0.15)
      for (int c = 0; c < 3; ++c) color[c] = std::fmod(color[c] + 0.4, 1.0);
  }

  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(video_index)));
  std::vector<detail::Sprite> sprites(static_cast<std::size_t>(cfg.num_sprites));
  for (auto& s : sprites) {
    s.disc = rng.next_real() < 0.5;
    const double size = rng.next_real(cfg.sprite_min_size, cfg.sprite_max_size);
    s.half_w = size / 2.0;
    s.half_h = s.disc ? s.half_w : rng.next_real(cfg.sprite_min_size, cfg.sprite_max_size) / 2.0;
    s.x = rng.next_real(s.half_w, w - s.half_w);
    s.y = rng.next_real(s.half_h, h - s.half_h);
    s.speed = rng.next_real(cfg.speed_min, cfg.speed_max);
    const double angle = rng.next_real(0.0, 2.0 * 3.14159265358979323846);
    s.vx = s.speed * std::cos(angle);
    s.vy = s.speed * std::sin(angle);
    s.color = palette[rng.next_index(kPaletteSize)];
  }

  FrameSequence<T> video;
  video.fps = cfg.fps;
  video.source_id = "synthetic_" + std::to_string(video_index);
  video.frames.reserve(static_cast<std::size_t>(cfg.frames_per_video));

  Image<T> canvas(w, h, ch);
  for (int f = 0; f < cfg.frames_per_video; ++f) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < ch; ++c) {
          double v;
          switch (cfg.background) {
            case BackgroundMode::Solid: v = bg0[c % 3]; break;
            case BackgroundMode::Gradient: {
              const double t = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
              v = (1.0 - t) * bg0[c % 3] + t * bg1[c % 3];
              break;
            }
            default: v = detail::texture_value(x, y, c, texture_salt);
          }
          canvas.at(x, y, c) = static_cast<T>(v);
        }
      }
    }
    for (const auto& s : sprites) {
      const int x_lo = std::max(0, static_cast<int>(std::floor(s.x - s.half_w - 1)));
      const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(s.x + s.half_w + 1)));
      const int y_lo = std::max(0, static_cast<int>(std::floor(s.y - s.half_h - 1)));
      const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(s.y + s.half_h + 1)));
      for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
          // Anti-aliased coverage with a one-pixel feather.
          double cov;
          if (s.disc) {
            const double dx = (x - s.x) / s.half_w, dy = (y - s.y) / s.half_h;
            const double dist = s.half_w * std::sqrt(dx * dx + dy * dy);
            cov = std::min(1.0, std::max(0.0, s.half_w + 0.5 - dist));
          } else {
            const double cx = std::min(1.0, std::max(0.0, s.half_w + 0.5 - std::abs(x - s.x)));
            const double cy = std::min(1.0, std::max(0.0, s.half_h + 0.5 - std::abs(y - s.y)));
            cov = cx * cy;
          }
          if (cov > 0.0)
            for (int c = 0; c < ch; ++c)
              canvas.at(x, y, c) = static_cast<T>((1.0 - cov) * canvas.at(x, y, c) +
                                                  cov * s.color[c % 3]);
        }
      }
    }
    video.frames.push_back(image_to_tensor(canvas));

    // Advance sprites: probabilistic direction change, reflective walls.
    for (auto& s : sprites) {
      if (cfg.direction_change_probability > 0.0 &&
          rng.next_real() < cfg.direction_change_probability) {
        const double angle = rng.next_real(0.0, 2.0 * 3.14159265358979323846);
        s.vx = s.speed * std::cos(angle);
        s.vy = s.speed * std::sin(angle);
      }
      s.x += s.vx;
      s.y += s.vy;
      if (s.x < s.half_w) {
        s.x = 2 * s.half_w - s.x;
        s.vx = -s.vx;
      } else if (s.x > w - s.half_w) {
        s.x = 2 * (w - s.half_w) - s.x;
        s.vx = -s.vx;
      }
      if (s.y < s.half_h) {
        s.y = 2 * s.half_h - s.y;
        s.vy = -s.vy;
      } else if (s.y > h - s.half_h) {
        s.y = 2 * (h - s.half_h) - s.y;
        s.vy = -s.vy;
      }
      s.x = std::min(std::max(s.x, 0.0), static_cast<double>(w));
      s.y = std::min(std::max(s.y, 0.0), static_cast<double>(h));
    }
  }
  return video;
}

template <class T>
std::vector<FrameSequence<T>> generate_synthetic_dataset(const SyntheticSceneConfig& cfg) {
  cfg.validate();
  std::vector<FrameSequence<T>> out;
  out.reserve(static_cast<std::size_t>(cfg.num_videos));
  for (int i = 0; i < cfg.num_videos; ++i)
    out.push_back(generate_synthetic_video<T>(cfg, i));
  return out;
}

}  // namespace foresee
