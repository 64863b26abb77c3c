// SPDX-License-Identifier: Apache-2.0
#include "sdt/model/sdt_model.hpp"

#include <algorithm>

#include "sdt/errors.hpp"
#include "sdt/model/attention.hpp"
#include "sdt/neuron/lif.hpp"
#include "sdt/numerics/op_support.hpp"
#include "sdt/numerics/ops.hpp"

namespace sdt::model {

template <typename T>
num::DenseTensor<T> make_input(std::span<const io::SpikeTensor> samples) {
  if (samples.empty()) throw DimensionError("empty batch");
  const auto& first = samples.front();
  const std::size_t steps = first.timesteps(), c = first.channels(), h = first.height(), w = first.width();
  const std::size_t batch = samples.size(), plane = c * h * w;
  num::DenseTensor<T> out(num::Shape{steps * batch, c, h, w});
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& s = samples[b];
    if (s.timesteps() != steps || s.channels() != c || s.height() != h || s.width() != w) {
      throw DimensionError("batch samples differ in shape");
    }
    for (std::size_t t = 0; t < steps; ++t) {
      T* dst = out.data() + (t * batch + b) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = s.get(t * plane + i) ? T{1} : T{0};
    }
  }
  return out;
}

template <typename T>
num::Var<T> residual_merge(num::Context<T>& ctx, const num::Var<T>& x, const num::Var<T>& path, ResidualMode mode) {
  if (x.shape() != path.shape()) throw DimensionError("residual merge shape mismatch");
  num::DenseTensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T s = x.value()[i] + path.value()[i];
    out[i] = mode == ResidualMode::clamp ? std::min(s, T{1}) : s;
  }
  const bool grad = ctx.recording() && num::any_requires_grad<T>({&x, &path});
  num::Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([x, path, result]() mutable {
      if (!result.has_grad()) return;
      for (const num::Var<T>* v : {&x, &path}) {
        if (!v->requires_grad()) continue;
        auto& g = v->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += result.grad()[i];
      }
    });
  }
  num::finish_op(ctx, "residual_merge", {&x, &path}, result);
  return result;
}

template <typename T>
SdtModel<T>::SdtModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const auto ch = cfg_.embed_channels();
  std::size_t cin = cfg_.channels;
  for (std::size_t i = 0; i < ch.size(); ++i) {
    embed_.push_back(make_conv_bn(store_, "embed." + std::to_string(i), cin, ch[i], 3, rng));
    cin = ch[i];
  }
  const std::size_t d = cfg_.embed_dim, hidden = cfg_.embed_dim * cfg_.mlp_ratio;
  for (std::size_t b = 0; b < cfg_.blocks; ++b) {
    const std::string p = "block." + std::to_string(b) + ".";
    BlockWeights<T> w{make_conv_bn(store_, p + "q", d, d, 1, rng),    make_conv_bn(store_, p + "k", d, d, 1, rng),
                      make_conv_bn(store_, p + "v", d, d, 1, rng),    make_conv_bn(store_, p + "proj", d, d, 1, rng),
                      make_conv_bn(store_, p + "fc1", d, hidden, 1, rng),
                      make_conv_bn(store_, p + "fc2", hidden, d, 1, rng)};
    blocks_.push_back(std::move(w));
  }
  head_ = head::make_head(store_, cfg_, rng);
}

template <typename T>
void SdtModel<T>::check_input(const num::Var<T>& input) const {
  const auto& s = input.shape();
  if (s.size() != 4 || s[0] == 0 || s[0] % cfg_.timesteps != 0 || s[1] != cfg_.channels || s[2] != cfg_.height ||
      s[3] != cfg_.width) {
    throw DimensionError("input " + num::to_string(s) + " does not match model [T*B, " +
                         std::to_string(cfg_.channels) + ", " + std::to_string(cfg_.height) + ", " +
                         std::to_string(cfg_.width) + "] with T=" + std::to_string(cfg_.timesteps));
  }
}

template <typename T>
num::Var<T> SdtModel<T>::patch_embed(num::Context<T>& ctx, const num::Var<T>& input) const {
  check_input(input);
  num::ScopeGuard<T> scope(ctx, "backbone.embed");
  num::Var<T> x = input;
  for (const auto& stage : embed_) {
    x = neuron::mlif(ctx, num::maxpool2d(ctx, stage.forward(ctx, x), 2, 2), cfg_.timesteps, cfg_.lif);
  }
  return x;
}

template <typename T>
num::Var<T> SdtModel<T>::ssa_path(num::Context<T>& ctx, std::size_t block, const num::Var<T>& x) const {
  const auto& w = blocks_.at(block);
  num::ScopeGuard<T> scope(ctx, "ssa");
  const auto q = neuron::mlif(ctx, w.q.forward(ctx, x), cfg_.timesteps, cfg_.lif);
  const auto k = neuron::mlif(ctx, w.k.forward(ctx, x), cfg_.timesteps, cfg_.lif);
  const auto v = neuron::mlif(ctx, w.v.forward(ctx, x), cfg_.timesteps, cfg_.lif);
  const auto attn = neuron::mlif(ctx, spike_attention_product(ctx, q, k, v, cfg_.attn_scale), cfg_.timesteps, cfg_.lif);
  return neuron::mlif(ctx, w.proj.forward(ctx, attn), cfg_.timesteps, cfg_.lif);
}

template <typename T>
num::Var<T> SdtModel<T>::mlp_path(num::Context<T>& ctx, std::size_t block, const num::Var<T>& x) const {
  const auto& w = blocks_.at(block);
  num::ScopeGuard<T> scope(ctx, "mlp");
  const auto hidden = neuron::mlif(ctx, w.fc1.forward(ctx, x), cfg_.timesteps, cfg_.lif);
  return neuron::mlif(ctx, w.fc2.forward(ctx, hidden), cfg_.timesteps, cfg_.lif);
}

template <typename T>
num::Var<T> SdtModel<T>::transformer_block(num::Context<T>& ctx, std::size_t block, const num::Var<T>& x) const {
  num::ScopeGuard<T> scope(ctx, "backbone.block" + std::to_string(block));
  const auto y = residual_merge(ctx, x, ssa_path(ctx, block, x), cfg_.residual);
  return residual_merge(ctx, y, mlp_path(ctx, block, y), cfg_.residual);
}

template <typename T>
BlockFeatures<T> SdtModel<T>::backbone_forward(num::Context<T>& ctx, const num::Var<T>& input) const {
  BlockFeatures<T> out;
  out.steps = cfg_.timesteps;
  out.batch = input.shape().empty() ? 0 : input.shape()[0] / cfg_.timesteps;
  auto x = patch_embed(ctx, input);
  for (std::size_t b = 0; b < cfg_.blocks; ++b) {
    x = transformer_block(ctx, b, x);
    out.blocks.push_back(x);
  }
  return out;
}

template <typename T>
num::Var<T> SdtModel<T>::head_logits(num::Context<T>& ctx, const BlockFeatures<T>& features) const {
  return head_->logits(ctx, features);
}

template <typename T>
num::Var<T> SdtModel<T>::predict(num::Context<T>& ctx, const BlockFeatures<T>& features) const {
  const auto logits = head_logits(ctx, features);
  num::ScopeGuard<T> scope(ctx, "head");
  return num::sigmoid(ctx, logits);
}

template <typename T>
std::vector<io::DepthMap> SdtModel<T>::infer(std::span<const io::SpikeTensor> samples) const {
  num::Context<T> ctx;
  num::Var<T> input(make_input<T>(samples));
  const auto features = backbone_forward(ctx, input);
  return to_depth_maps(predict(ctx, features).value());
}

template <typename T>
std::vector<io::DepthMap> to_depth_maps(const num::DenseTensor<T>& prediction) {
  if (prediction.rank() != 4 || prediction.dim(1) != 1) {
    throw DimensionError("prediction must be [B,1,H,W], got " + num::to_string(prediction.shape()));
  }
  const std::size_t batch = prediction.dim(0), h = prediction.dim(2), w = prediction.dim(3);
  std::vector<io::DepthMap> maps;
  for (std::size_t b = 0; b < batch; ++b) {
    io::DepthMap m(h, w);
    for (std::size_t i = 0; i < h * w; ++i) m.values[i] = static_cast<float>(prediction[b * h * w + i]);
    maps.push_back(std::move(m));
  }
  return maps;
}

template num::DenseTensor<float> make_input(std::span<const io::SpikeTensor>);
template num::DenseTensor<double> make_input(std::span<const io::SpikeTensor>);
template num::Var<float> residual_merge(num::Context<float>&, const num::Var<float>&, const num::Var<float>&,
                                        ResidualMode);
template num::Var<double> residual_merge(num::Context<double>&, const num::Var<double>&, const num::Var<double>&,
                                         ResidualMode);
template std::vector<io::DepthMap> to_depth_maps(const num::DenseTensor<float>&);
template std::vector<io::DepthMap> to_depth_maps(const num::DenseTensor<double>&);
template class SdtModel<float>;
template class SdtModel<double>;

}  // namespace sdt::model
