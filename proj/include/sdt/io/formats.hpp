// SPDX-License-Identifier: Apache-2.0
//
// Binary file formats. All integers are u32 little-endian, all reals float32
// little-endian, row-major.
//   SPKT: "SPKT", version=1, T, C, H, W, packed bits (MSB first)
//   DPTH: "DPTH", H, W, values (NaN marks an invalid pixel)
//   FEAT: "FEAT", D, H, W, values
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sdt/io/spike_tensor.hpp"
#include "sdt/numerics/tensor.hpp"

namespace sdt::io {

inline constexpr std::uint32_t kSpikeFormatVersion = 1;

/// H x W normalized depth with a per-pixel validity mask.
struct DepthMap {
  DepthMap() = default;
  DepthMap(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0.0f), mask(h * w, 1) {}

  std::size_t height = 0, width = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> mask;  // 1 = valid

  std::size_t size() const noexcept { return values.size(); }
  bool valid(std::size_t i) const noexcept { return mask[i] != 0; }
  std::size_t valid_count() const noexcept;
};

/// One training/evaluation example. Teacher features are [d, H/8, W/8].
struct SampleTuple {
  SpikeTensor spikes;
  DepthMap depth;
  std::optional<num::DenseTensor<float>> teacher_features;
};

std::vector<std::uint8_t> encode_spk(const SpikeTensor& spikes);
SpikeTensor decode_spk(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_depth(const DepthMap& depth);
DepthMap decode_depth(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_feat(const num::DenseTensor<float>& features);
num::DenseTensor<float> decode_feat(const std::vector<std::uint8_t>& bytes);

void write_spk(const std::filesystem::path& path, const SpikeTensor& spikes);
SpikeTensor read_spk(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_depth(const std::filesystem::path& path);
void write_feat(const std::filesystem::path& path, const num::DenseTensor<float>& features);
num::DenseTensor<float> read_feat(const std::filesystem::path& path);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples), depth*65535
/// rounded; invalid pixels are written as 0.
void write_depth_pgm(const std::filesystem::path& path, const DepthMap& depth);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// Dataset directory: manifest.txt lists "spk dpth feat" relative paths per line.
struct ManifestEntry {
  std::string spikes, depth, features;
};
inline constexpr const char* kManifestName = "manifest.txt";
void write_manifest(const std::filesystem::path& dir, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);
std::vector<SampleTuple> load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const std::vector<SampleTuple>& samples);

}  // namespace sdt::io
