// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "sdt/distill/losses.hpp"
#include "sdt/model/config.hpp"

namespace sdt::train {

struct TrainConfig {
  std::uint64_t seed = 7;
  std::size_t epochs = 500;
  std::size_t batch_size = 4;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;         // global L2 norm; 0 disables
  std::size_t checkpoint_every = 0;  // steps; 0 writes only the final checkpoint
  bool calibrate_offset = true;   // refit the output bias after training

  void validate() const;
};

/// Flat key=value run description: model, training, distillation and paths.
struct RunConfig {
  model::ModelConfig model;
  TrainConfig train;
  distill::DistillConfig distill;
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;

  /// Unknown keys throw ConfigError; so does a missing `data` or `out`.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  std::map<std::string, std::string> to_kv() const;

  std::filesystem::path loss_csv() const { return out_dir / "loss.csv"; }
  std::filesystem::path final_checkpoint() const { return out_dir / "model.sdtw"; }
};

}  // namespace sdt::train
