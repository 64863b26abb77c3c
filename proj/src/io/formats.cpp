// SPDX-License-Identifier: Apache-2.0
#include "sdt/io/formats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "sdt/errors.hpp"
#include "sdt/io/byte_stream.hpp"

namespace sdt::io {

namespace fs = std::filesystem;

std::size_t DepthMap::valid_count() const noexcept {
  std::size_t n = 0;
  for (auto m : mask) n += m != 0;
  return n;
}

namespace {

std::uint32_t checked_dim(std::size_t d, const char* what) {
  if (d == 0 || d > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError(std::string(what) + " must be in [1, 2^32)");
  }
  return static_cast<std::uint32_t>(d);
}

}  // namespace

std::vector<std::uint8_t> encode_spk(const SpikeTensor& spikes) {
  ByteWriter out;
  out.tag("SPKT");
  out.u32(kSpikeFormatVersion);
  out.u32(checked_dim(spikes.timesteps(), "T"));
  out.u32(checked_dim(spikes.channels(), "C"));
  out.u32(checked_dim(spikes.height(), "H"));
  out.u32(checked_dim(spikes.width(), "W"));
  out.raw(spikes.bits());
  return std::move(out.bytes());
}

SpikeTensor decode_spk(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes);
  in.expect_tag("SPKT");
  const auto version = in.u32();
  if (version != kSpikeFormatVersion) throw FormatError("unsupported SPKT version " + std::to_string(version));
  const std::size_t t = in.u32(), c = in.u32(), h = in.u32(), w = in.u32();
  if (t == 0 || c == 0 || h == 0 || w == 0) throw FormatError("SPKT dimensions must be positive");
  auto bits = in.raw(SpikeTensor::payload_bytes(t * c * h * w));
  in.expect_end();
  return SpikeTensor(t, c, h, w, std::move(bits));
}

std::vector<std::uint8_t> encode_depth(const DepthMap& depth) {
  if (depth.values.size() != depth.height * depth.width || depth.mask.size() != depth.values.size()) {
    throw DimensionError("depth map storage does not match its dimensions");
  }
  ByteWriter out;
  out.tag("DPTH");
  out.u32(checked_dim(depth.height, "H"));
  out.u32(checked_dim(depth.width, "W"));
  for (std::size_t i = 0; i < depth.size(); ++i) {
    out.f32(depth.valid(i) ? depth.values[i] : std::numeric_limits<float>::quiet_NaN());
  }
  return std::move(out.bytes());
}

DepthMap decode_depth(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes);
  in.expect_tag("DPTH");
  const std::size_t h = in.u32(), w = in.u32();
  if (h == 0 || w == 0) throw FormatError("DPTH dimensions must be positive");
  if (in.remaining() < h * w * 4) throw LengthError("DPTH payload truncated");
  DepthMap depth(h, w);
  for (std::size_t i = 0; i < h * w; ++i) {
    const float v = in.f32();
    if (std::isnan(v)) {
      depth.values[i] = 0.0f;
      depth.mask[i] = 0;
    } else {
      depth.values[i] = v;
    }
  }
  in.expect_end();
  return depth;
}

std::vector<std::uint8_t> encode_feat(const num::DenseTensor<float>& features) {
  if (features.rank() != 3) throw DimensionError("FEAT tensor must be [D,H,W], got " + num::to_string(features.shape()));
  ByteWriter out;
  out.tag("FEAT");
  for (std::size_t d : features.shape()) out.u32(checked_dim(d, "FEAT dim"));
  for (float v : features.values()) out.f32(v);
  return std::move(out.bytes());
}

num::DenseTensor<float> decode_feat(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes);
  in.expect_tag("FEAT");
  const std::size_t d = in.u32(), h = in.u32(), w = in.u32();
  if (d == 0 || h == 0 || w == 0) throw FormatError("FEAT dimensions must be positive");
  if (in.remaining() < d * h * w * 4) throw LengthError("FEAT payload truncated");
  num::DenseTensor<float> out(num::Shape{d, h, w});
  for (float& v : out.values()) v = in.f32();
  in.expect_end();
  return out;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_spk(const fs::path& path, const SpikeTensor& spikes) { write_file(path, encode_spk(spikes)); }
SpikeTensor read_spk(const fs::path& path) { return decode_spk(read_file(path)); }
void write_depth(const fs::path& path, const DepthMap& depth) { write_file(path, encode_depth(depth)); }
DepthMap read_depth(const fs::path& path) { return decode_depth(read_file(path)); }
void write_feat(const fs::path& path, const num::DenseTensor<float>& f) { write_file(path, encode_feat(f)); }
num::DenseTensor<float> read_feat(const fs::path& path) { return decode_feat(read_file(path)); }

void write_depth_pgm(const fs::path& path, const DepthMap& depth) {
  const std::string header = "P5\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) + "\n65535\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    double v = depth.valid(i) ? std::clamp(static_cast<double>(depth.values[i]), 0.0, 1.0) : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    bytes.push_back(static_cast<std::uint8_t>(q >> 8));
    bytes.push_back(static_cast<std::uint8_t>(q & 0xff));
  }
  write_file(path, bytes);
}

void write_manifest(const fs::path& dir, const std::vector<ManifestEntry>& entries) {
  std::ostringstream os;
  os << "# spk dpth feat\n";
  for (const auto& e : entries) os << e.spikes << ' ' << e.depth << ' ' << (e.features.empty() ? "-" : e.features) << '\n';
  const std::string text = os.str();
  write_file(dir / kManifestName, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
  const auto bytes = read_file(dir / kManifestName);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    if (!(ls >> e.spikes >> e.depth >> e.features)) throw FormatError("malformed manifest line: " + line);
    if (e.features == "-") e.features.clear();
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<SampleTuple> load_dataset(const fs::path& dir) {
  std::vector<SampleTuple> samples;
  for (const auto& e : read_manifest(dir)) {
    SampleTuple s{read_spk(dir / e.spikes), read_depth(dir / e.depth), std::nullopt};
    if (!e.features.empty()) s.teacher_features = read_feat(dir / e.features);
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_dataset(const fs::path& dir, const std::vector<SampleTuple>& samples) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample_%04zu", i);
    ManifestEntry e{std::string(stem) + ".spk", std::string(stem) + ".dpth", {}};
    write_spk(dir / e.spikes, samples[i].spikes);
    write_depth(dir / e.depth, samples[i].depth);
    if (samples[i].teacher_features) {
      e.features = std::string(stem) + ".feat";
      write_feat(dir / e.features, *samples[i].teacher_features);
    }
    entries.push_back(std::move(e));
  }
  write_manifest(dir, entries);
}

}  // namespace sdt::io
