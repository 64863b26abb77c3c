// SPDX-License-Identifier: Apache-2.0
#include "sdt/head/fusion_head.hpp"

#include "sdt/errors.hpp"
#include "sdt/numerics/op_support.hpp"
#include "sdt/numerics/ops.hpp"

namespace sdt::head {

template <typename T>
num::Var<T> rate_encode(num::Context<T>& ctx, const num::Var<T>& spikes, std::size_t steps,
                        model::RateDecode decode) {
  if (steps == 0) throw DimensionError("rate_encode needs T >= 1");
  const auto& shape = spikes.shape();
  if (shape.size() != 4 || shape[0] % steps != 0) {
    throw DimensionError("rate_encode expects [T*B, D, h, w] with T=" + std::to_string(steps) + ", got " +
                         num::to_string(shape));
  }
  const std::size_t batch = shape[0] / steps, plane = shape[1] * shape[2] * shape[3];
  const T weight = decode == model::RateDecode::mean ? static_cast<T>(1.0 / static_cast<double>(steps)) : T{1};
  num::DenseTensor<T> out(num::Shape{batch, shape[1], shape[2], shape[3]});
  const T* in = spikes.value().data();
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < batch * plane; ++i) out[i] += in[t * batch * plane + i];
  }
  for (T& v : out.values()) v *= weight;

  const bool grad = ctx.recording() && spikes.requires_grad();
  num::Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([spikes, result, steps, batch, plane, weight]() mutable {
      if (!result.has_grad()) return;
      T* g = spikes.grad_buffer().data();
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < batch * plane; ++i) g[t * batch * plane + i] += result.grad()[i] * weight;
      }
    });
  }
  num::finish_op(ctx, "rate_encode", {&spikes}, result);
  return result;
}

template <typename T>
FusionHead<T>::FusionHead(model::ParamStore<T>& store, const model::ModelConfig& cfg, Rng& rng)
    : decode_(cfg.decode) {
  if (cfg.blocks != 4) throw ConfigError("fusion head needs 4 feature levels, got " + std::to_string(cfg.blocks));
  const std::size_t d = cfg.embed_dim;
  for (int level = 2; level <= 4; ++level) {
    levels_.push_back(model::make_conv_bn(store, "head.fuse" + std::to_string(level), d, d, 1, rng));
  }
  proj_ = model::make_conv(store, "head.proj", d, 1, 1, rng);
}

template <typename T>
FusionTrace<T> FusionHead<T>::forward_levels(num::Context<T>& ctx, const model::BlockFeatures<T>& features) const {
  if (features.size() != 4) {
    throw ConfigError("fusion head got " + std::to_string(features.size()) + " feature levels, expected 4");
  }
  num::ScopeGuard<T> scope(ctx, "head");
  std::vector<num::Var<T>> rates;
  for (const auto& f : features.blocks) rates.push_back(rate_encode(ctx, f, features.steps, decode_));

  FusionTrace<T> out;
  auto carried = rates[0];
  const std::size_t skip_factor[3] = {2, 4, 8};
  num::Var<T>* slots[3] = {&out.y2, &out.y3, &out.y4};
  for (std::size_t i = 0; i < 3; ++i) {
    auto up = levels_[i].forward(ctx, num::upsample_bilinear(ctx, carried, 2));
    carried = num::add(ctx, up, num::upsample_bilinear(ctx, rates[i + 1], skip_factor[i]));
    *slots[i] = carried;
  }
  out.logits = proj_.forward(ctx, carried);
  return out;
}

template <typename T>
num::Var<T> FusionHead<T>::logits(num::Context<T>& ctx, const model::BlockFeatures<T>& features) const {
  return forward_levels(ctx, features).logits;
}

template <typename T>
LinearFcnHead<T>::LinearFcnHead(model::ParamStore<T>& store, const model::ModelConfig& cfg, Rng& rng)
    : decode_(cfg.decode), layer_(model::make_conv_bn(store, "head.linear", cfg.embed_dim, 1, 1, rng)) {}

template <typename T>
num::Var<T> LinearFcnHead<T>::logits(num::Context<T>& ctx, const model::BlockFeatures<T>& features) const {
  if (features.size() == 0) throw ConfigError("linear head needs at least one feature level");
  num::ScopeGuard<T> scope(ctx, "head");
  auto rate = rate_encode(ctx, features.blocks.back(), features.steps, decode_);
  return num::upsample_bilinear(ctx, layer_.forward(ctx, rate), 8);
}

template <typename T>
std::unique_ptr<DepthHead<T>> make_head(model::ParamStore<T>& store, const model::ModelConfig& cfg, Rng& rng) {
  if (cfg.head == model::HeadKind::fusion) return std::make_unique<FusionHead<T>>(store, cfg, rng);
  return std::make_unique<LinearFcnHead<T>>(store, cfg, rng);
}

template num::Var<float> rate_encode(num::Context<float>&, const num::Var<float>&, std::size_t, model::RateDecode);
template num::Var<double> rate_encode(num::Context<double>&, const num::Var<double>&, std::size_t,
                                      model::RateDecode);
template class FusionHead<float>;
template class FusionHead<double>;
template class LinearFcnHead<float>;
template class LinearFcnHead<double>;
template std::unique_ptr<DepthHead<float>> make_head(model::ParamStore<float>&, const model::ModelConfig&, Rng&);
template std::unique_ptr<DepthHead<double>> make_head(model::ParamStore<double>&, const model::ModelConfig&, Rng&);

}  // namespace sdt::head
