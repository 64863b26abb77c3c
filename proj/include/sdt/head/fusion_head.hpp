// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "sdt/model/config.hpp"
#include "sdt/model/features.hpp"
#include "sdt/model/params.hpp"

namespace sdt::head {

/// Firing rate over time: [T*B, D, h, w] spikes -> [B, D, h, w]. Mean over T
/// (values in [0,1]) or, for the `sum` decode, the spike count.
template <typename T>
num::Var<T> rate_encode(num::Context<T>& ctx, const num::Var<T>& spikes, std::size_t steps,
                        model::RateDecode decode = model::RateDecode::mean);

/// Maps block features to pre-sigmoid depth logits [B, 1, H, W].
template <typename T>
class DepthHead {
 public:
  virtual ~DepthHead() = default;
  virtual num::Var<T> logits(num::Context<T>& ctx, const model::BlockFeatures<T>& features) const = 0;
  /// Scalar added to every output logit (shifts the predicted depth level).
  virtual num::Var<T> output_bias() const = 0;
};

/// Intermediate fusion maps, exposed for resolution checks.
template <typename T>
struct FusionTrace {
  num::Var<T> y2, y3, y4, logits;
};

/// Coarse-to-fine fusion of four blocks:
///   Y2 = ConvBN(Up2(R1)) + Up2(R2)        at H/4
///   Y3 = ConvBN(Up2(Y2)) + Up4(R3)        at H/2
///   Y4 = ConvBN(Up2(Y3)) + Up8(R4)        at H
///   logits = Conv1x1(Y4) -> 1 channel
/// with R_i the rate-encoded block outputs and ConvBN 1x1, D -> D.
template <typename T>
class FusionHead final : public DepthHead<T> {
 public:
  FusionHead(model::ParamStore<T>& store, const model::ModelConfig& cfg, Rng& rng);

  num::Var<T> logits(num::Context<T>& ctx, const model::BlockFeatures<T>& features) const override;
  num::Var<T> output_bias() const override { return proj_.bias; }
  FusionTrace<T> forward_levels(num::Context<T>& ctx, const model::BlockFeatures<T>& features) const;

 private:
  model::RateDecode decode_;
  std::vector<model::ConvBn<T>> levels_;
  model::Conv<T> proj_;
};

/// Ablation head using only the final block: ConvBN 1x1 (D -> 1), x8
/// bilinear upsampling.
template <typename T>
class LinearFcnHead final : public DepthHead<T> {
 public:
  LinearFcnHead(model::ParamStore<T>& store, const model::ModelConfig& cfg, Rng& rng);

  num::Var<T> logits(num::Context<T>& ctx, const model::BlockFeatures<T>& features) const override;
  num::Var<T> output_bias() const override { return layer_.beta; }

 private:
  model::RateDecode decode_;
  model::ConvBn<T> layer_;
};

template <typename T>
std::unique_ptr<DepthHead<T>> make_head(model::ParamStore<T>& store, const model::ModelConfig& cfg, Rng& rng);

}  // namespace sdt::head
