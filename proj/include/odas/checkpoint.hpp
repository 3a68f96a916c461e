#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "odas/binary_io.hpp"
#include "odas/nn.hpp"

namespace odas {

// ODNN checkpoint layout (little-endian):
//   "ODNN" u16 version u32 layer_count
//   per layer: u32 kind (0 dense, 1 batchnorm)
//     dense:     u32 out_dim u32 in_dim, weights (row-major out×in f64), bias (out f64)
//     batchnorm: u32 dim, f64 epsilon, f64 momentum, gamma, beta, running_mean, running_var (dim f64 each)
// Layers are fc6 fc7 fc8, optionally followed by gen.fc1 gen.bn1 gen.fc2 gen.bn2.

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  nn::Discriminator discriminator;
  std::optional<nn::Generator> generator;

  /// Shapes recovered from the stored layers; lambda, window_len and stride keep their defaults.
  ModelConfig model_config() const {
    ModelConfig cfg;
    cfg.feature_dim = discriminator.feature_dim();
    cfg.fc_hidden_dim = discriminator.hidden_dim();
    cfg.num_action_classes = discriminator.num_action_classes();
    if (generator) {
      cfg.noise_dim = generator->noise_dim();
      cfg.gen_hidden_dim = generator->fc1.out_dim();
    }
    return cfg;
  }
};

namespace detail {

enum : std::uint32_t { kDenseLayer = 0, kBatchNormLayer = 1 };

inline void write_values(std::ostream& out, std::span<const double> v) {
  for (double x : v) io::write_f64(out, x);
}

inline void read_values(std::istream& in, std::span<double> v) {
  for (double& x : v) x = io::read_f64(in);
}

inline void write_layer(std::ostream& out, const nn::DenseLayer& l) {
  io::write_le(out, std::uint32_t{kDenseLayer});
  io::write_le(out, static_cast<std::uint32_t>(l.out_dim()));
  io::write_le(out, static_cast<std::uint32_t>(l.in_dim()));
  write_values(out, l.weights.values());
  write_values(out, l.bias);
}

inline void write_layer(std::ostream& out, const nn::BatchNormLayer& l) {
  io::write_le(out, std::uint32_t{kBatchNormLayer});
  io::write_le(out, static_cast<std::uint32_t>(l.dim()));
  io::write_f64(out, l.epsilon);
  io::write_f64(out, l.momentum);
  write_values(out, l.gamma);
  write_values(out, l.beta);
  write_values(out, l.running_mean);
  write_values(out, l.running_var);
}

inline constexpr std::uint32_t kMaxDim = 1u << 20;

inline nn::DenseLayer read_dense(std::istream& in, const std::string& name) {
  require(io::read_le<std::uint32_t>(in) == kDenseLayer, ErrorKind::format, name + ": expected dense layer");
  auto out_dim = io::read_le<std::uint32_t>(in);
  auto in_dim = io::read_le<std::uint32_t>(in);
  require(out_dim >= 1 && in_dim >= 1 && out_dim <= kMaxDim && in_dim <= kMaxDim, ErrorKind::format,
          name + ": implausible layer shape");
  nn::DenseLayer l(name, static_cast<int>(in_dim), static_cast<int>(out_dim));
  read_values(in, l.weights.values());
  read_values(in, l.bias);
  return l;
}

inline nn::BatchNormLayer read_batchnorm(std::istream& in, const std::string& name) {
  require(io::read_le<std::uint32_t>(in) == kBatchNormLayer, ErrorKind::format,
          name + ": expected batchnorm layer");
  auto dim = io::read_le<std::uint32_t>(in);
  require(dim >= 1 && dim <= kMaxDim, ErrorKind::format, name + ": implausible layer shape");
  nn::BatchNormLayer l(name, static_cast<int>(dim));
  l.epsilon = io::read_f64(in);
  l.momentum = io::read_f64(in);
  read_values(in, l.gamma);
  read_values(in, l.beta);
  read_values(in, l.running_mean);
  read_values(in, l.running_var);
  require(l.epsilon > 0.0, ErrorKind::format, name + ": epsilon must be positive");
  return l;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const nn::Discriminator& d, const nn::Generator* g = nullptr) {
  io::write_magic(out, "ODNN");
  io::write_le(out, kCheckpointVersion);
  io::write_le(out, static_cast<std::uint32_t>(g ? 7 : 3));
  detail::write_layer(out, d.fc6);
  detail::write_layer(out, d.fc7);
  detail::write_layer(out, d.fc8);
  if (g) {
    detail::write_layer(out, g->fc1);
    detail::write_layer(out, g->bn1);
    detail::write_layer(out, g->fc2);
    detail::write_layer(out, g->bn2);
  }
}

inline Checkpoint read_checkpoint(std::istream& in) {
  io::expect_magic(in, "ODNN");
  const auto version = io::read_le<std::uint16_t>(in);
  require(version == kCheckpointVersion, ErrorKind::format,
          "unsupported checkpoint version " + std::to_string(version));
  const auto layers = io::read_le<std::uint32_t>(in);
  require(layers == 3 || layers == 7, ErrorKind::format, "checkpoint must hold 3 or 7 layers");
  auto fc6 = detail::read_dense(in, "fc6");
  auto fc7 = detail::read_dense(in, "fc7");
  auto fc8 = detail::read_dense(in, "fc8");
  Checkpoint ckpt{nn::Discriminator(std::move(fc6), std::move(fc7), std::move(fc8)), std::nullopt};
  if (layers == 7) {
    auto fc1 = detail::read_dense(in, "gen.fc1");
    auto bn1 = detail::read_batchnorm(in, "gen.bn1");
    auto fc2 = detail::read_dense(in, "gen.fc2");
    auto bn2 = detail::read_batchnorm(in, "gen.bn2");
    ckpt.generator.emplace(std::move(fc1), std::move(bn1), std::move(fc2), std::move(bn2));
  }
  return ckpt;
}

inline std::string checkpoint_bytes(const nn::Discriminator& d, const nn::Generator* g = nullptr) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, d, g);
  return out.str();
}

inline void save_checkpoint(const std::filesystem::path& path, const nn::Discriminator& d,
                            const nn::Generator* g = nullptr) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::input, "cannot open " + path.string() + " for writing");
  write_checkpoint(out, d, g);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::input, "cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace odas
