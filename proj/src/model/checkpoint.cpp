// SPDX-License-Identifier: Apache-2.0
#include "sdt/model/checkpoint.hpp"

#include "sdt/errors.hpp"
#include "sdt/io/byte_stream.hpp"
#include "sdt/io/formats.hpp"
#include "sdt/kv.hpp"

namespace sdt::model {

namespace {

template <typename T>
CheckpointTensor to_entry(const std::string& name, CheckpointTensor::Kind kind, const num::DenseTensor<T>& t) {
  CheckpointTensor e{name, kind, t.shape(), {}};
  e.data.reserve(t.size());
  for (T v : t.values()) e.data.push_back(static_cast<float>(v));
  return e;
}

template <typename T>
void copy_into(const Checkpoint& ckpt, const std::string& name, num::DenseTensor<T>& dst) {
  const CheckpointTensor* e = ckpt.find(name);
  if (!e) throw ConfigError("checkpoint missing tensor " + name);
  if (e->shape != dst.shape()) {
    throw ConfigError("checkpoint tensor " + name + " has shape " + num::to_string(e->shape) + ", model expects " +
                      num::to_string(dst.shape()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(e->data[i]);
}

}  // namespace

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.tag("SDTW");
  w.u32(Checkpoint::kVersion);
  const std::string cfg = kv::format(ckpt.config.to_kv());
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.raw(std::vector<std::uint8_t>(cfg.begin(), cfg.end()));
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (num::numel(t.shape) != t.data.size()) throw DimensionError("tensor " + t.name + " data/shape mismatch");
    w.u8(static_cast<std::uint8_t>(t.kind));
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.raw(std::vector<std::uint8_t>(t.name.begin(), t.name.end()));
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data) w.f32(v);
  }
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes);
  r.expect_tag("SDTW");
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) throw FormatError("unsupported SDTW version " + std::to_string(version));
  const auto cfg_bytes = r.raw(r.u32());
  Checkpoint ckpt;
  const auto entries = kv::parse(std::string(cfg_bytes.begin(), cfg_bytes.end()));
  for (const auto& [key, value] : entries) {
    bool known = false;
    for (const char* k : ModelConfig::keys()) known = known || key == k;
    if (!known) throw FormatError("unknown checkpoint config key " + key);
  }
  ckpt.config.apply_kv(entries);
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    const std::uint8_t kind = r.u8();
    if (kind > 1) throw FormatError("bad tensor kind " + std::to_string(kind));
    t.kind = static_cast<CheckpointTensor::Kind>(kind);
    const auto name = r.raw(r.u32());
    t.name.assign(name.begin(), name.end());
    const std::uint32_t ndim = r.u32();
    for (std::uint32_t d = 0; d < ndim; ++d) t.shape.push_back(r.u32());
    const std::size_t n = num::numel(t.shape);
    if (r.remaining() / 4 < n) throw LengthError("truncated tensor " + t.name);
    t.data.resize(n);
    for (auto& v : t.data) v = r.f32();
    ckpt.tensors.push_back(std::move(t));
  }
  r.expect_end();
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

template <typename T>
Checkpoint capture(const SdtModel<T>& model) {
  Checkpoint ckpt;
  ckpt.config = model.config();
  for (const auto& p : model.store().params()) {
    ckpt.tensors.push_back(to_entry(p.name, CheckpointTensor::Kind::param, p.var.value()));
  }
  for (const auto& bn : model.store().batchnorms()) {
    ckpt.tensors.push_back(to_entry(bn.name + ".running_mean", CheckpointTensor::Kind::buffer, bn.state->running_mean));
    ckpt.tensors.push_back(to_entry(bn.name + ".running_var", CheckpointTensor::Kind::buffer, bn.state->running_var));
  }
  return ckpt;
}

template <typename T>
void restore(SdtModel<T>& model, const Checkpoint& ckpt) {
  if (!(ckpt.config == model.config())) throw ConfigError("checkpoint config differs from model config");
  for (const auto& p : model.store().params()) {
    num::Var<T> var = p.var;
    copy_into(ckpt, p.name, var.mutable_value());
  }
  for (const auto& bn : model.store().batchnorms()) {
    copy_into(ckpt, bn.name + ".running_mean", bn.state->running_mean);
    copy_into(ckpt, bn.name + ".running_var", bn.state->running_var);
  }
}

template <typename T>
std::unique_ptr<SdtModel<T>> load_model(const Checkpoint& ckpt) {
  auto model = std::make_unique<SdtModel<T>>(ckpt.config, 0);
  restore(*model, ckpt);
  return model;
}

template Checkpoint capture(const SdtModel<float>&);
template Checkpoint capture(const SdtModel<double>&);
template void restore(SdtModel<float>&, const Checkpoint&);
template void restore(SdtModel<double>&, const Checkpoint&);
template std::unique_ptr<SdtModel<float>> load_model(const Checkpoint&);
template std::unique_ptr<SdtModel<double>> load_model(const Checkpoint&);

}  // namespace sdt::model
