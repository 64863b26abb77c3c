// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sdt/head/fusion_head.hpp"
#include "sdt/io/formats.hpp"
#include "sdt/model/config.hpp"
#include "sdt/model/features.hpp"
#include "sdt/model/params.hpp"

namespace sdt::model {

/// Stacks spike tensors into the backbone input layout [T*B, C, H, W],
/// frame index t*B + b. All samples must share dimensions.
template <typename T>
num::DenseTensor<T> make_input(std::span<const io::SpikeTensor> samples);

/// Spike residual merge. clamp: min(x + path, 1) keeps the stream binary;
/// add: plain integer sum. Gradients pass straight through to both inputs.
template <typename T>
num::Var<T> residual_merge(num::Context<T>& ctx, const num::Var<T>& x, const num::Var<T>& path, ResidualMode mode);

template <typename T>
struct BlockWeights {
  ConvBn<T> q, k, v, proj;  // 1x1 over the token grid
  ConvBn<T> fc1, fc2;       // MLP D -> ratio*D -> D
};

/// Spike-driven transformer for dense depth: spiking patch embedding, L
/// transformer blocks with spike self-attention, and a depth head.
template <typename T>
class SdtModel {
 public:
  SdtModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return cfg_; }
  ParamStore<T>& store() noexcept { return store_; }
  const ParamStore<T>& store() const noexcept { return store_; }
  const head::DepthHead<T>& depth_head() const noexcept { return *head_; }

  /// Three ConvBN(3x3) -> MaxPool(2) -> MLIF stages: [T*B, C, H, W] ->
  /// [T*B, D, H/8, W/8], binary.
  num::Var<T> patch_embed(num::Context<T>& ctx, const num::Var<T>& input) const;
  /// Attention path: MLIF(ConvBN_{q,k,v}(x)), s*(QK^T)V, MLIF, ConvBN, MLIF.
  num::Var<T> ssa_path(num::Context<T>& ctx, std::size_t block, const num::Var<T>& x) const;
  /// MLP path: ConvBN(D -> rD), MLIF, ConvBN(rD -> D), MLIF.
  num::Var<T> mlp_path(num::Context<T>& ctx, std::size_t block, const num::Var<T>& x) const;
  /// Y = X (+) SSA(X); Z = Y (+) MLP(Y).
  num::Var<T> transformer_block(num::Context<T>& ctx, std::size_t block, const num::Var<T>& x) const;
  BlockFeatures<T> backbone_forward(num::Context<T>& ctx, const num::Var<T>& input) const;

  num::Var<T> head_logits(num::Context<T>& ctx, const BlockFeatures<T>& features) const;
  /// Sigmoid depth in (0,1), [B, 1, H, W].
  num::Var<T> predict(num::Context<T>& ctx, const BlockFeatures<T>& features) const;

  /// Inference (eval statistics, no tape) for a batch of spike tensors.
  std::vector<io::DepthMap> infer(std::span<const io::SpikeTensor> samples) const;

 private:
  void check_input(const num::Var<T>& input) const;

  ModelConfig cfg_;
  ParamStore<T> store_;
  std::vector<ConvBn<T>> embed_;
  std::vector<BlockWeights<T>> blocks_;
  std::unique_ptr<head::DepthHead<T>> head_;
};

/// Converts a [B, 1, H, W] prediction into depth maps (all pixels valid).
template <typename T>
std::vector<io::DepthMap> to_depth_maps(const num::DenseTensor<T>& prediction);

extern template class SdtModel<float>;
extern template class SdtModel<double>;

}  // namespace sdt::model
