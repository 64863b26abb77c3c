// SPDX-License-Identifier: Apache-2.0
#include "sdt/model/config.hpp"

#include "sdt/errors.hpp"
#include "sdt/kv.hpp"

namespace sdt::model {

std::string to_string(ResidualMode m) { return m == ResidualMode::clamp ? "clamp" : "add"; }
std::string to_string(HeadKind h) { return h == HeadKind::fusion ? "fusion" : "linear_fcn"; }
std::string to_string(RateDecode r) { return r == RateDecode::mean ? "mean" : "sum"; }

ResidualMode parse_residual(const std::string& s) {
  if (s == "clamp") return ResidualMode::clamp;
  if (s == "add") return ResidualMode::add;
  throw ConfigError("residual must be clamp or add, got '" + s + "'");
}

HeadKind parse_head(const std::string& s) {
  if (s == "fusion") return HeadKind::fusion;
  if (s == "linear_fcn") return HeadKind::linear_fcn;
  throw ConfigError("head must be fusion or linear_fcn, got '" + s + "'");
}

RateDecode parse_decode(const std::string& s) {
  if (s == "mean") return RateDecode::mean;
  if (s == "sum") return RateDecode::sum;
  throw ConfigError("rate_decode must be mean or sum, got '" + s + "'");
}

void ModelConfig::validate() const {
  if (timesteps == 0) throw DimensionError("timesteps must be positive");
  if (channels == 0) throw DimensionError("channels must be positive");
  if (height == 0 || width == 0 || height % 8 != 0 || width % 8 != 0) {
    throw DimensionError("height and width must be positive multiples of 8, got " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  if (embed_dim < 4 || embed_dim % 4 != 0) throw DimensionError("embed_dim must be a positive multiple of 4");
  if (blocks == 0) throw ConfigError("blocks must be >= 1");
  if (!(attn_scale > 0.0)) throw ConfigError("attn_scale must be positive");
  if (mlp_ratio == 0) throw ConfigError("mlp_ratio must be positive");
  if (head == HeadKind::fusion && blocks != 4) {
    throw ConfigError("fusion head needs exactly 4 blocks, got " + std::to_string(blocks));
  }
  lif.validate();
}

const std::array<const char*, 15>& ModelConfig::keys() {
  static const std::array<const char*, 15> k = {
      "timesteps",   "channels",  "height",    "width",         "embed_dim",      "blocks",
      "attn_scale",  "mlp_ratio", "lif_tau",   "lif_threshold", "lif_reset",      "surrogate_alpha",
      "residual",    "head",      "rate_decode"};
  return k;
}

std::map<std::string, std::string> ModelConfig::to_kv() const {
  return {
      {"timesteps", std::to_string(timesteps)},
      {"channels", std::to_string(channels)},
      {"height", std::to_string(height)},
      {"width", std::to_string(width)},
      {"embed_dim", std::to_string(embed_dim)},
      {"blocks", std::to_string(blocks)},
      {"attn_scale", kv::number(attn_scale)},
      {"mlp_ratio", std::to_string(mlp_ratio)},
      {"lif_tau", kv::number(lif.tau)},
      {"lif_threshold", kv::number(lif.v_threshold)},
      {"lif_reset", kv::number(lif.v_reset)},
      {"surrogate_alpha", kv::number(lif.surrogate_alpha)},
      {"residual", to_string(residual)},
      {"head", to_string(head)},
      {"rate_decode", to_string(decode)},
  };
}

void ModelConfig::apply_kv(const std::map<std::string, std::string>& kv) {
  auto get = [&](const char* key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("timesteps")) timesteps = kv::to_size("timesteps", *v);
  if (auto v = get("channels")) channels = kv::to_size("channels", *v);
  if (auto v = get("height")) height = kv::to_size("height", *v);
  if (auto v = get("width")) width = kv::to_size("width", *v);
  if (auto v = get("embed_dim")) embed_dim = kv::to_size("embed_dim", *v);
  if (auto v = get("blocks")) blocks = kv::to_size("blocks", *v);
  if (auto v = get("attn_scale")) attn_scale = kv::to_double("attn_scale", *v);
  if (auto v = get("mlp_ratio")) mlp_ratio = kv::to_size("mlp_ratio", *v);
  if (auto v = get("lif_tau")) lif.tau = kv::to_double("lif_tau", *v);
  if (auto v = get("lif_threshold")) lif.v_threshold = kv::to_double("lif_threshold", *v);
  if (auto v = get("lif_reset")) lif.v_reset = kv::to_double("lif_reset", *v);
  if (auto v = get("surrogate_alpha")) lif.surrogate_alpha = kv::to_double("surrogate_alpha", *v);
  if (auto v = get("residual")) residual = parse_residual(*v);
  if (auto v = get("head")) head = parse_head(*v);
  if (auto v = get("rate_decode")) decode = parse_decode(*v);
}

}  // namespace sdt::model
