// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sdt/model/config.hpp"
#include "sdt/model/sdt_model.hpp"

namespace sdt::model {

struct CheckpointTensor {
  enum class Kind : std::uint8_t { param = 0, buffer = 1 };
  std::string name;
  Kind kind = Kind::param;
  num::Shape shape;
  std::vector<float> data;

  friend bool operator==(const CheckpointTensor&, const CheckpointTensor&) = default;
};

/// SDTW layout (little-endian):
///   "SDTW" u32 version u32 cfg_len cfg(key=value text)
///   u32 count { u8 kind u32 name_len name u32 ndim u32 dims[ndim] f32 data[] }
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  ModelConfig config;
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Parameters, then batch-norm running statistics, in registration order.
template <typename T>
Checkpoint capture(const SdtModel<T>& model);

/// Copies tensors into a model with the same config. Missing or misshapen
/// tensors throw ConfigError.
template <typename T>
void restore(SdtModel<T>& model, const Checkpoint& ckpt);

template <typename T>
std::unique_ptr<SdtModel<T>> load_model(const Checkpoint& ckpt);

}  // namespace sdt::model
