#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/frames.hpp"
#include "foresee/hash.hpp"

namespace foresee {

namespace detail {

inline void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32be(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[5],
                         const std::vector<std::uint8_t>& payload) {
  put_u32be(out, static_cast<std::uint32_t>(payload.size()));
  std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  put_u32be(out, crc32(out.data() + crc_start, out.size() - crc_start));
}

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace detail

// Encodes an 8-bit RGB (or grayscale) raster as a PNG byte stream.
inline std::vector<std::uint8_t> encode_png(const Image<std::uint8_t>& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ContractError("encode_png: only 1- or 3-channel images are written");
  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

  std::vector<std::uint8_t> ihdr;
  detail::put_u32be(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_u32be(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(img.channels == 3 ? 2 : 0);           // color type
  ihdr.push_back(0);                                   // compression
  ihdr.push_back(0);                                   // filter method
  ihdr.push_back(0);                                   // no interlace
  detail::append_chunk(out, "IHDR", ihdr);

  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    const std::uint8_t* row = img.pix.data() + static_cast<std::size_t>(y) * stride;
    raw.insert(raw.end(), row, row + stride);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> idat(bound);
  if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw FormatError("encode_png: deflate failed");
  idat.resize(bound);
  detail::append_chunk(out, "IDAT", idat);
  detail::append_chunk(out, "IEND", {});
  return out;
}

// Decodes a PNG byte stream to 8-bit RGB. Supports non-interlaced 8-bit
// grayscale, gray+alpha, RGB, RGBA and palette images; everything else is
// rejected with a format error.
inline Image<std::uint8_t> decode_png(const std::vector<std::uint8_t>& bytes,
                                      const std::string& name = "png") {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw FormatError(name + ": not a PNG file");

  std::uint32_t width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  std::vector<std::uint8_t> idat;
  std::vector<std::uint8_t> palette;
  bool seen_ihdr = false, seen_iend = false;

  std::size_t pos = 8;
  while (pos + 8 <= bytes.size() && !seen_iend) {
    const std::uint32_t len = detail::get_u32be(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw FormatError(name + ": truncated chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* payload = bytes.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw FormatError(name + ": bad IHDR length");
      width = detail::get_u32be(payload);
      height = detail::get_u32be(payload + 4);
      bit_depth = payload[8];
      color_type = payload[9];
      if (payload[12] != 0) throw FormatError(name + ": interlaced PNGs are not supported");
      if (bit_depth != 8) throw FormatError(name + ": only 8-bit PNGs are supported");
      if (color_type != 0 && color_type != 2 && color_type != 3 && color_type != 4 &&
          color_type != 6)
        throw FormatError(name + ": unsupported color type " + std::to_string(color_type));
      seen_ihdr = true;
    } else if (std::memcmp(type, "PLTE", 4) == 0) {
      palette.assign(payload, payload + len);
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_iend = true;
    }
    pos += 12 + len;
  }
  if (!seen_ihdr || width == 0 || height == 0) throw FormatError(name + ": missing IHDR");
  if (idat.empty()) throw FormatError(name + ": no image data");

  const int in_channels = color_type == 2 ? 3 : color_type == 6 ? 4 : color_type == 4 ? 2 : 1;
  const std::size_t stride = static_cast<std::size_t>(width) * in_channels;
  std::vector<std::uint8_t> raw((stride + 1) * height);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw FormatError(name + ": corrupt image data");

  // Undo per-row filters in place.
  std::vector<std::uint8_t> prev(stride, 0);
  std::vector<std::uint8_t> cur(stride, 0);
  std::vector<std::uint8_t> planes;
  planes.reserve(stride * height);
  const int bpp = in_channels;
  for (std::uint32_t y = 0; y < height; ++y) {
    const std::uint8_t* src = raw.data() + y * (stride + 1);
    const std::uint8_t filter = src[0];
    const std::uint8_t* line = src + 1;
    for (std::size_t x = 0; x < stride; ++x) {
      const int a = x >= static_cast<std::size_t>(bpp) ? cur[x - bpp] : 0;
      const int b = prev[x];
      const int c = x >= static_cast<std::size_t>(bpp) ? prev[x - bpp] : 0;
      int v = line[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += detail::paeth(a, b, c); break;
        default: throw FormatError(name + ": unknown filter " + std::to_string(filter));
      }
      cur[x] = static_cast<std::uint8_t>(v & 0xff);
    }
    planes.insert(planes.end(), cur.begin(), cur.end());
    std::swap(prev, cur);
  }

  Image<std::uint8_t> out(static_cast<int>(width), static_cast<int>(height), 3);
  for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
    const std::uint8_t* px = planes.data() + i * in_channels;
    std::uint8_t r, g, b;
    if (color_type == 2 || color_type == 6) {
      r = px[0];
      g = px[1];
      b = px[2];
    } else if (color_type == 3) {
      const std::size_t idx = static_cast<std::size_t>(px[0]) * 3;
      if (idx + 2 >= palette.size()) throw FormatError(name + ": palette index out of range");
      r = palette[idx];
      g = palette[idx + 1];
      b = palette[idx + 2];
    } else {  // grayscale, with or without alpha
      r = g = b = px[0];
    }
    out.pix[i * 3] = r;
    out.pix[i * 3 + 1] = g;
    out.pix[i * 3 + 2] = b;
  }
  return out;
}

inline std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open file");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

inline void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot open file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path + ": write failed");
}

inline void save_png(const std::string& path, const Image<std::uint8_t>& img) {
  write_binary_file(path, encode_png(img));
}

inline Image<std::uint8_t> load_png(const std::string& path) {
  return decode_png(read_binary_file(path), path);
}

}  // namespace foresee
