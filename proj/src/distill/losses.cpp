// SPDX-License-Identifier: Apache-2.0
#include "sdt/distill/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sdt/errors.hpp"
#include "sdt/head/fusion_head.hpp"
#include "sdt/numerics/op_support.hpp"

namespace sdt::distill {

std::vector<std::size_t> DistillConfig::resolved_blocks(std::size_t blocks) const {
  if (matched_blocks.empty()) return {blocks};
  return matched_blocks;
}

void DistillConfig::validate(std::size_t blocks) {
  if (!(lambda_p >= 0.0) || !(lambda_2 >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (teacher_dim == 0) throw ConfigError("teacher_dim must be >= 1");
  if (!(log_eps > 0.0)) throw ConfigError("log_eps must be > 0");
  for (std::size_t b : resolved_blocks(blocks)) {
    if (b < 1 || b > blocks) {
      throw ConfigError("matched block " + std::to_string(b) + " outside 1.." + std::to_string(blocks));
    }
  }
}

template <typename T>
double perceptual_loss(const num::DenseTensor<T>& x, const num::DenseTensor<T>& teacher) {
  if (x.shape() != teacher.shape()) {
    throw DimensionError("perceptual loss shapes " + num::to_string(x.shape()) + " vs " +
                         num::to_string(teacher.shape()));
  }
  if (x.empty()) throw DimensionError("perceptual loss on empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(teacher[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

template <typename T>
num::Var<T> perceptual_loss(num::Context<T>& ctx, const num::Var<T>& x, const num::DenseTensor<T>& teacher) {
  const double value = perceptual_loss(x.value(), teacher);
  const bool grad = ctx.recording() && x.requires_grad();
  num::Var<T> result(num::DenseTensor<T>(num::Shape{}, static_cast<T>(value)), grad);
  if (grad) {
    ctx.tape->record([x, result, teacher]() mutable {
      if (!result.has_grad()) return;
      const T k = result.grad()[0] * static_cast<T>(2.0 / static_cast<double>(teacher.size()));
      auto& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * (x.value()[i] - teacher[i]);
    });
  }
  num::finish_op(ctx, "perceptual_loss", {&x}, result);
  return result;
}

double si_l2_loss(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask) {
  if (pred.size() != gt.size() || pred.size() != mask.size()) throw DimensionError("si_l2 size mismatch");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double r = gt[i] - pred[i];
    s += r;
    ++n;
  }
  if (n == 0) throw EmptyMaskError("no valid pixels");
  const double m = s / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double d = gt[i] - pred[i] - m;
    var += d * d;
  }
  return var / static_cast<double>(n);
}

double si_l2_loss(const io::DepthMap& pred, const io::DepthMap& gt, bool log_domain, double eps) {
  if (pred.height != gt.height || pred.width != gt.width) throw DimensionError("si_l2 depth map size mismatch");
  std::vector<double> p(pred.size()), g(gt.size());
  std::vector<std::uint8_t> mask(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    mask[i] = pred.valid(i) && gt.valid(i);
    p[i] = pred.values[i];
    g[i] = gt.values[i];
    if (log_domain) {
      p[i] = std::log(std::max(p[i], eps));
      g[i] = std::log(std::max(g[i], eps));
    }
  }
  return si_l2_loss(p, g, mask);
}

template <typename T>
num::Var<T> si_l2_loss(num::Context<T>& ctx, const num::Var<T>& pred, std::span<const io::DepthMap> gt,
                       bool log_domain, double eps) {
  const auto& shape = pred.shape();
  if (shape.size() != 4 || shape[1] != 1 || shape[0] != gt.size()) {
    throw DimensionError("si_l2 expects pred [B,1,H,W] matching " + std::to_string(gt.size()) + " targets, got " +
                         num::to_string(shape));
  }
  const std::size_t batch = shape[0], plane = shape[2] * shape[3];
  // Residual centred per sample and the derivative of each residual wrt pred.
  std::vector<double> centred(batch * plane, 0.0), dr(batch * plane, 0.0);
  std::vector<std::size_t> counts(batch, 0);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& g = gt[b];
    if (g.height != shape[2] || g.width != shape[3]) throw DimensionError("si_l2 target size mismatch");
    std::vector<double> r(plane, 0.0);
    std::size_t n = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      if (!g.valid(i)) continue;
      const double p = static_cast<double>(pred.value()[b * plane + i]);
      if (log_domain) {
        const double pc = std::max(p, eps);
        r[i] = std::log(std::max(static_cast<double>(g.values[i]), eps)) - std::log(pc);
        dr[b * plane + i] = p > eps ? -1.0 / p : 0.0;
      } else {
        r[i] = static_cast<double>(g.values[i]) - p;
        dr[b * plane + i] = -1.0;
      }
      s += r[i];
      ++n;
    }
    if (n == 0) throw EmptyMaskError("no valid pixels in sample " + std::to_string(b));
    const double m = s / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      if (!g.valid(i)) continue;
      centred[b * plane + i] = r[i] - m;
      var += (r[i] - m) * (r[i] - m);
    }
    counts[b] = n;
    total += var / static_cast<double>(n);
  }
  total /= static_cast<double>(batch);

  const bool grad = ctx.recording() && pred.requires_grad();
  num::Var<T> result(num::DenseTensor<T>(num::Shape{}, static_cast<T>(total)), grad);
  if (grad) {
    ctx.tape->record([pred, result, centred, dr, counts, batch, plane]() mutable {
      if (!result.has_grad()) return;
      const double up = static_cast<double>(result.grad()[0]);
      auto& g = pred.grad_buffer();
      for (std::size_t b = 0; b < batch; ++b) {
        const double k = up * 2.0 / (static_cast<double>(counts[b]) * static_cast<double>(batch));
        for (std::size_t i = 0; i < plane; ++i) {
          const std::size_t j = b * plane + i;
          g[j] += static_cast<T>(k * centred[j] * dr[j]);
        }
      }
    });
  }
  num::finish_op(ctx, "si_l2_loss", {&pred}, result);
  return result;
}

template <typename T>
Distiller<T>::Distiller(const model::ModelConfig& model_cfg, DistillConfig cfg, std::uint64_t seed)
    : model_cfg_(model_cfg), cfg_(std::move(cfg)) {
  cfg_.validate(model_cfg_.blocks);
  if (!cfg_.kd) return;
  Rng rng(seed);
  for (std::size_t b : cfg_.resolved_blocks(model_cfg_.blocks)) {
    adapters_.emplace(b, model::make_conv(store_, "adapter." + std::to_string(b), model_cfg_.embed_dim,
                                          cfg_.teacher_dim, 1, rng));
  }
}

template <typename T>
LossTerms<T> Distiller<T>::total_loss(num::Context<T>& ctx, const model::BlockFeatures<T>& features,
                                      const num::Var<T>& pred, std::span<const io::DepthMap> gt,
                                      std::span<const num::DenseTensor<float>* const> teacher) const {
  num::ScopeGuard<T> scope(ctx, "loss");
  LossTerms<T> out;
  num::Var<T> l2 = si_l2_loss(ctx, pred, gt, cfg_.log_domain, cfg_.log_eps);
  out.l_2 = static_cast<double>(l2.value()[0]);
  out.total = num::scale(ctx, l2, static_cast<T>(cfg_.lambda_2));
  if (!cfg_.kd) return out;

  const std::size_t batch = features.batch;
  if (teacher.size() != batch) throw DataError("teacher features missing for part of the batch");
  const std::size_t gh = model_cfg_.grid_height(), gw = model_cfg_.grid_width(), d = cfg_.teacher_dim;
  num::DenseTensor<T> target(num::Shape{batch, d, gh, gw});
  for (std::size_t b = 0; b < batch; ++b) {
    if (!teacher[b]) throw DataError("teacher features missing for sample " + std::to_string(b));
    const auto& t = *teacher[b];
    if (t.shape() != num::Shape{d, gh, gw}) {
      throw DimensionError("teacher features " + num::to_string(t.shape()) + ", expected " +
                           num::to_string(num::Shape{d, gh, gw}));
    }
    std::copy(t.values().begin(), t.values().end(), target.data() + b * d * gh * gw);
  }
  for (const auto& [block, adapter] : adapters_) {
    num::ScopeGuard<T> bscope(ctx, "perceptual" + std::to_string(block));
    const auto rate = head::rate_encode(ctx, features.blocks.at(block - 1), features.steps, model_cfg_.decode);
    const auto lp = perceptual_loss(ctx, adapter.forward(ctx, rate), target);
    out.l_p += static_cast<double>(lp.value()[0]);
    out.total = num::add(ctx, out.total, num::scale(ctx, lp, static_cast<T>(cfg_.lambda_p)));
  }
  return out;
}

template double perceptual_loss(const num::DenseTensor<float>&, const num::DenseTensor<float>&);
template double perceptual_loss(const num::DenseTensor<double>&, const num::DenseTensor<double>&);
template num::Var<float> perceptual_loss(num::Context<float>&, const num::Var<float>&,
                                         const num::DenseTensor<float>&);
template num::Var<double> perceptual_loss(num::Context<double>&, const num::Var<double>&,
                                          const num::DenseTensor<double>&);
template num::Var<float> si_l2_loss(num::Context<float>&, const num::Var<float>&, std::span<const io::DepthMap>, bool,
                                    double);
template num::Var<double> si_l2_loss(num::Context<double>&, const num::Var<double>&, std::span<const io::DepthMap>,
                                     bool, double);
template class Distiller<float>;
template class Distiller<double>;

}  // namespace sdt::distill
