// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sdt/energy/audit.hpp"
#include "sdt/io/formats.hpp"
#include "sdt/metrics/depth_metrics.hpp"
#include "sdt/model/checkpoint.hpp"
#include "sdt/model/sdt_model.hpp"
#include "sdt/train/run_config.hpp"

namespace sdt::train {

struct LossRecord {
  std::size_t step = 0;
  double total = 0.0;
  double l_p = 0.0;
  double l_2 = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

/// "step,total,l_p,l_2" header plus one row per record.
std::string loss_csv(const std::vector<LossRecord>& curve);

struct TrainResult {
  std::unique_ptr<model::SdtModel<float>> model;
  std::vector<LossRecord> curve;
  double output_offset = 0.0;  // added to the output bias by calibration
};

using ProgressFn = std::function<void(const LossRecord&)>;

/// Throws ConfigError when a sample does not match the model geometry.
void check_compatible(const model::ModelConfig& cfg, const io::SampleTuple& sample);

/// Adam over backbone, head and adapters with global-norm clipping. With a
/// non-empty `run.out_dir`, writes loss.csv, model.sdtw and, every
/// `checkpoint_every` steps, ckpt_stepNNNNNN.sdtw. Non-finite loss throws
/// NumericError.
TrainResult train(const std::vector<io::SampleTuple>& dataset, const RunConfig& run, const ProgressFn& progress = {});

/// Least-squares fit of a global logit shift b minimizing
/// sum (sigmoid(z + b) - gt)^2 over valid pixels; adds b to the output bias.
template <typename T>
double calibrate_output_offset(model::SdtModel<T>& model, const std::vector<io::SampleTuple>& dataset);

struct EvalResult {
  metrics::MetricsReport mean;
  std::vector<metrics::MetricsReport> per_sample;
  energy::EnergyReport energy;
};

/// Per-sample metrics (up to `threads` workers, fixed reduction order) and an
/// energy audit of the first sample. Empty dataset throws EmptyMaskError.
template <typename T>
EvalResult evaluate_model(const model::SdtModel<T>& model, const std::vector<io::SampleTuple>& dataset,
                          std::size_t threads = 1, const energy::EnergyConstants& constants = {});

EvalResult evaluate_checkpoint(const model::Checkpoint& ckpt, const std::vector<io::SampleTuple>& dataset,
                               std::size_t threads = 1, const energy::EnergyConstants& constants = {});

/// Worker count from SDT_THREADS, default 1.
std::size_t threads_from_env();

}  // namespace sdt::train
