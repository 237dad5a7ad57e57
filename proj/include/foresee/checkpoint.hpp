#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/hash.hpp"
#include "foresee/lstm.hpp"
#include "foresee/model.hpp"
#include "foresee/optim.hpp"
#include "foresee/png.hpp"  // binary file helpers

namespace foresee {

// Checkpoint container: magic "FRSE", u16 format version, the model config as
// little-endian integers/enums, then each named tensor as (name length, name
// bytes, rank, dims, f32 payload), and a trailing CRC32 of everything prior.

namespace detail {

inline void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32le(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32le(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  const std::uint8_t* take(std::size_t n) {
    if (remaining() < n) throw FormatError(name_ + ": truncated checkpoint");
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint8_t u8() { return *take(1); }
  std::uint16_t u16le() {
    const std::uint8_t* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32le() {
    const std::uint8_t* p = take(4);
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
  }
  float f32le() {
    const std::uint32_t bits = u32le();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

template <class T>
void append_tensor_block(std::vector<std::uint8_t>& out, const std::string& name,
                         const Tensor<T>& t) {
  put_u32le(out, static_cast<std::uint32_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_u32le(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d = 0; d < t.rank(); ++d)
    put_u32le(out, static_cast<std::uint32_t>(t.dim(d)));
  for (std::size_t i = 0; i < t.size(); ++i) put_f32le(out, static_cast<float>(t[i]));
}

}  // namespace detail

inline constexpr std::uint16_t kCheckpointVersion = 1;

template <class T>
std::vector<std::uint8_t> serialize_checkpoint(
    const ModelConfig& cfg, const std::vector<std::pair<std::string, Tensor<T>>>& tensors) {
  std::vector<std::uint8_t> out = {'F', 'R', 'S', 'E'};
  detail::put_u16le(out, kCheckpointVersion);
  detail::put_u32le(out, static_cast<std::uint32_t>(cfg.input_dim));
  detail::put_u32le(out, static_cast<std::uint32_t>(cfg.hidden_size));
  detail::put_u32le(out, static_cast<std::uint32_t>(cfg.num_layers));
  detail::put_u32le(out, static_cast<std::uint32_t>(cfg.seq_len));
  out.push_back(cfg.attn_placement == AttnPlacement::Output ? 0 : 1);
  out.push_back(cfg.attn_steps == AttnSteps::Last ? 0 : 1);
  out.push_back(cfg.literal_attn_exp ? 1 : 0);
  for (const auto& [name, t] : tensors) detail::append_tensor_block(out, name, t);
  detail::put_u32le(out, crc32(out));
  return out;
}

struct ParsedCheckpoint {
  ModelConfig config;
  std::map<std::string, std::pair<Shape, std::vector<float>>> tensors;
};

inline ParsedCheckpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes,
                                         const std::string& name) {
  if (bytes.size() < 4 + 2 + 19 + 4) throw FormatError(name + ": truncated checkpoint");
  const std::uint32_t stored = std::uint32_t(bytes[bytes.size() - 4]) |
                               (std::uint32_t(bytes[bytes.size() - 3]) << 8) |
                               (std::uint32_t(bytes[bytes.size() - 2]) << 16) |
                               (std::uint32_t(bytes[bytes.size() - 1]) << 24);
  if (crc32(bytes.data(), bytes.size() - 4) != stored)
    throw FormatError(name + ": checksum mismatch, file is corrupt");

  detail::ByteReader in(bytes, name);
  const std::uint8_t* magic = in.take(4);
  if (std::memcmp(magic, "FRSE", 4) != 0) throw FormatError(name + ": bad magic");
  const std::uint16_t version = in.u16le();
  if (version != kCheckpointVersion)
    throw FormatError(name + ": unsupported checkpoint version " + std::to_string(version));

  ParsedCheckpoint out;
  out.config.input_dim = static_cast<int>(in.u32le());
  out.config.hidden_size = static_cast<int>(in.u32le());
  out.config.num_layers = static_cast<int>(in.u32le());
  out.config.seq_len = static_cast<int>(in.u32le());
  out.config.attn_placement = in.u8() == 0 ? AttnPlacement::Output : AttnPlacement::Hidden;
  out.config.attn_steps = in.u8() == 0 ? AttnSteps::Last : AttnSteps::All;
  out.config.literal_attn_exp = in.u8() != 0;

  while (in.remaining() > 4) {
    const std::uint32_t name_len = in.u32le();
    const std::uint8_t* name_bytes = in.take(name_len);
    std::string tname(reinterpret_cast<const char*>(name_bytes), name_len);
    const std::uint32_t rank = in.u32le();
    Shape shape;
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(in.u32le());
      numel *= shape.back();
    }
    std::vector<float> data(numel);
    for (std::size_t i = 0; i < numel; ++i) data[i] = in.f32le();
    if (!out.tensors.emplace(tname, std::make_pair(std::move(shape), std::move(data))).second)
      throw FormatError(name + ": duplicate tensor '" + tname + "'");
  }
  if (in.remaining() != 4) throw FormatError(name + ": malformed tensor section");
  return out;
}

namespace detail {

template <class T>
void assign_from_parsed(const ParsedCheckpoint& parsed, const std::string& file,
                        std::vector<std::pair<std::string, Tensor<T>>> dest) {
  for (auto& [name, tensor] : dest) {
    auto it = parsed.tensors.find(name);
    if (it == parsed.tensors.end())
      throw FormatError(file + ": missing tensor '" + name + "'");
    const auto& [shape, data] = it->second;
    if (shape != tensor.shape())
      throw FormatError(file + ": tensor '" + name + "' has shape " + shape_str(shape) +
                        ", expected " + shape_str(tensor.shape()));
    for (std::size_t i = 0; i < data.size(); ++i) tensor[i] = static_cast<T>(data[i]);
  }
  if (parsed.tensors.size() != dest.size())
    throw FormatError(file + ": checkpoint holds " + std::to_string(parsed.tensors.size()) +
                      " tensors, expected " + std::to_string(dest.size()));
}

}  // namespace detail

template <class T>
void save_checkpoint(const ForeseeModel<T>& model, const std::string& path) {
  write_binary_file(path, serialize_checkpoint(model.config(), model.named_parameters()));
}

template <class T>
ForeseeModel<T> load_foresee_checkpoint(const std::string& path) {
  const ParsedCheckpoint parsed = parse_checkpoint(read_binary_file(path), path);
  ForeseeModel<T> model(parsed.config, /*seed=*/0);
  detail::assign_from_parsed(parsed, path, model.named_parameters());
  return model;
}

template <class T>
void save_checkpoint(const EncDecLstm<T>& model, const std::string& path) {
  write_binary_file(path, serialize_checkpoint(model.config(), model.named_parameters()));
}

template <class T>
EncDecLstm<T> load_encdec_checkpoint(const std::string& path) {
  const ParsedCheckpoint parsed = parse_checkpoint(read_binary_file(path), path);
  EncDecLstm<T> model(parsed.config, /*seed=*/0);
  detail::assign_from_parsed(parsed, path, model.named_parameters());
  return model;
}

// Optimizer state uses the same tensor-block container with a neutral config.
template <class T>
void save_optimizer_state(const Optimizer<T>& opt, const std::string& path) {
  std::vector<std::pair<std::string, Tensor<T>>> blocks;
  blocks.emplace_back("meta",
                      Tensor<T>(Shape{3}, std::vector<T>{static_cast<T>(opt.kind_ ==
                                                                        OptimizerKind::Adam
                                                                            ? 0
                                                                            : 1),
                                                         static_cast<T>(opt.t_), opt.lr_}));
  for (std::size_t i = 0; i < opt.slot1_.size(); ++i)
    blocks.emplace_back("m1." + std::to_string(i), opt.slot1_[i]);
  for (std::size_t i = 0; i < opt.slot2_.size(); ++i)
    blocks.emplace_back("m2." + std::to_string(i), opt.slot2_[i]);
  ModelConfig neutral;
  neutral.input_dim = 1;
  neutral.hidden_size = 1;
  neutral.num_layers = 1;
  neutral.seq_len = 1;
  write_binary_file(path, serialize_checkpoint(neutral, blocks));
}

template <class T>
void load_optimizer_state(Optimizer<T>& opt, const std::string& path) {
  const ParsedCheckpoint parsed = parse_checkpoint(read_binary_file(path), path);
  auto meta = parsed.tensors.find("meta");
  if (meta == parsed.tensors.end()) throw FormatError(path + ": missing optimizer metadata");
  const auto& mv = meta->second.second;
  const OptimizerKind kind = mv[0] == 0.0f ? OptimizerKind::Adam : OptimizerKind::Adagrad;
  if (kind != opt.kind_) throw FormatError(path + ": optimizer kind mismatch");
  opt.t_ = static_cast<long>(mv[1]);
  std::vector<std::pair<std::string, Tensor<T>>> dest;
  for (std::size_t i = 0; i < opt.slot1_.size(); ++i)
    dest.emplace_back("m1." + std::to_string(i), opt.slot1_[i]);
  for (std::size_t i = 0; i < opt.slot2_.size(); ++i)
    dest.emplace_back("m2." + std::to_string(i), opt.slot2_[i]);
  ParsedCheckpoint without_meta = parsed;
  without_meta.tensors.erase("meta");
  detail::assign_from_parsed(without_meta, path, std::move(dest));
}

// git-style content hash of a file, for run manifests.
inline std::string file_content_hash(const std::string& path) {
  return git_blob_sha1(read_binary_file(path));
}

}  // namespace foresee
