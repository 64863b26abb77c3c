// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdt/io/formats.hpp"
#include "sdt/model/config.hpp"
#include "sdt/model/features.hpp"
#include "sdt/model/params.hpp"

namespace sdt::distill {

struct DistillConfig {
  double lambda_p = 1.0;
  double lambda_2 = 1.0;
  std::vector<std::size_t> matched_blocks;  // 1-based; empty means the final block
  std::size_t teacher_dim = 16;
  bool kd = true;
  bool log_domain = false;  // SI loss on log depth
  double log_eps = 1e-6;

  /// Resolves the empty default against `blocks` and checks ranges.
  void validate(std::size_t blocks);
  std::vector<std::size_t> resolved_blocks(std::size_t blocks) const;
};

/// (1/N) * sum (x - x')^2 over all entries. Throws DimensionError on shape
/// mismatch.
template <typename T>
double perceptual_loss(const num::DenseTensor<T>& x, const num::DenseTensor<T>& teacher);

/// Differentiable form; `teacher` is a constant and never enters the tape.
template <typename T>
num::Var<T> perceptual_loss(num::Context<T>& ctx, const num::Var<T>& x, const num::DenseTensor<T>& teacher);

/// Population variance of r = gt - pred over jointly valid pixels:
/// mean(r^2) - mean(r)^2. Throws EmptyMaskError when no pixel is valid.
double si_l2_loss(const io::DepthMap& pred, const io::DepthMap& gt, bool log_domain = false, double eps = 1e-6);
double si_l2_loss(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask);

/// Batched differentiable form over pred[B,1,H,W]; per-sample variance,
/// averaged across the batch.
template <typename T>
num::Var<T> si_l2_loss(num::Context<T>& ctx, const num::Var<T>& pred, std::span<const io::DepthMap> gt,
                       bool log_domain = false, double eps = 1e-6);

template <typename T>
struct LossTerms {
  num::Var<T> total;
  double l_p = 0.0;  // summed over matched blocks, unweighted
  double l_2 = 0.0;
};

/// Owns the per-block 1x1 adapters (D -> teacher_dim) and combines
///   total = lambda_p * sum_i L_Pi + lambda_2 * L_2.
template <typename T>
class Distiller {
 public:
  Distiller(const model::ModelConfig& model_cfg, DistillConfig cfg, std::uint64_t seed);

  const DistillConfig& config() const noexcept { return cfg_; }
  model::ParamStore<T>& adapters() noexcept { return store_; }

  /// `teacher` holds one [d, h, w] tensor per sample (every matched block is
  /// compared against the same tensor). Unused when kd is off.
  LossTerms<T> total_loss(num::Context<T>& ctx, const model::BlockFeatures<T>& features, const num::Var<T>& pred,
                          std::span<const io::DepthMap> gt,
                          std::span<const num::DenseTensor<float>* const> teacher) const;

 private:
  model::ModelConfig model_cfg_;
  DistillConfig cfg_;
  model::ParamStore<T> store_;
  std::map<std::size_t, model::Conv<T>> adapters_;
};

}  // namespace sdt::distill
