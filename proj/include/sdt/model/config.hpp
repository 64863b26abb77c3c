// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>

#include "sdt/neuron/lif.hpp"

namespace sdt::model {

enum class ResidualMode { clamp, add };
enum class HeadKind { fusion, linear_fcn };
enum class RateDecode { mean, sum };

std::string to_string(ResidualMode m);
std::string to_string(HeadKind h);
std::string to_string(RateDecode r);
ResidualMode parse_residual(const std::string& s);
HeadKind parse_head(const std::string& s);
RateDecode parse_decode(const std::string& s);

/// Architecture hyperparameters.
struct ModelConfig {
  std::size_t timesteps = 4;
  std::size_t channels = 2;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t embed_dim = 128;
  std::size_t blocks = 4;
  double attn_scale = 0.25;
  std::size_t mlp_ratio = 4;
  neuron::LifParams lif;
  ResidualMode residual = ResidualMode::clamp;
  HeadKind head = HeadKind::fusion;
  RateDecode decode = RateDecode::mean;

  /// Throws ConfigError/DimensionError on an inconsistent configuration.
  void validate() const;

  std::size_t grid_height() const noexcept { return height / 8; }
  std::size_t grid_width() const noexcept { return width / 8; }
  std::size_t tokens() const noexcept { return grid_height() * grid_width(); }
  /// Patch-embedding channel schedule [D/4, D/2, D].
  std::array<std::size_t, 3> embed_channels() const noexcept { return {embed_dim / 4, embed_dim / 2, embed_dim}; }

  std::map<std::string, std::string> to_kv() const;
  /// Applies every recognized key of `kv`; unrecognized keys are ignored here
  /// (callers that must reject them check `keys()`).
  void apply_kv(const std::map<std::string, std::string>& kv);
  static const std::array<const char*, 15>& keys();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace sdt::model
