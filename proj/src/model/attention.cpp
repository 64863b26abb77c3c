// SPDX-License-Identifier: Apache-2.0
#include "sdt/model/attention.hpp"

#include <Eigen/Core>

#include "sdt/errors.hpp"
#include "sdt/numerics/op_support.hpp"

namespace sdt::model {

std::vector<std::int32_t> spike_gram(std::span<const std::uint8_t> q, std::span<const std::uint8_t> k, std::size_t n,
                                     std::size_t d) {
  std::vector<std::int32_t> a(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::int32_t acc = 0;
      for (std::size_t c = 0; c < d; ++c) acc += q[i * d + c] & k[j * d + c];
      a[i * n + j] = acc;
    }
  }
  return a;
}

std::vector<std::int32_t> attention_left(std::span<const std::uint8_t> q, std::span<const std::uint8_t> k,
                                         std::span<const std::uint8_t> v, std::size_t n, std::size_t d) {
  const auto a = spike_gram(q, k, n, d);
  std::vector<std::int32_t> out(n * d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::int32_t w = a[i * n + j];
      if (w == 0) continue;
      for (std::size_t c = 0; c < d; ++c) {
        if (v[j * d + c]) out[i * d + c] += w;
      }
    }
  }
  return out;
}

std::vector<std::int32_t> attention_right(std::span<const std::uint8_t> q, std::span<const std::uint8_t> k,
                                          std::span<const std::uint8_t> v, std::size_t n, std::size_t d) {
  // kv[c][e] = sum_j k[j][c] v[j][e]
  std::vector<std::int32_t> kv(d * d, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < d; ++c) {
      if (!k[j * d + c]) continue;
      for (std::size_t e = 0; e < d; ++e) kv[c * d + e] += v[j * d + e];
    }
  }
  std::vector<std::int32_t> out(n * d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      if (!q[i * d + c]) continue;
      for (std::size_t e = 0; e < d; ++e) out[i * d + e] += kv[c * d + e];
    }
  }
  return out;
}

namespace {

// [D, N] channel-major frame -> N x D token-major bytes.
template <typename T>
void gather_tokens(const T* frame, std::size_t n, std::size_t d, std::uint8_t* dst) {
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < n; ++i) dst[i * d + c] = frame[c * n + i] != T{0};
  }
}

}  // namespace

template <typename T>
num::Var<T> spike_attention_product(num::Context<T>& ctx, const num::Var<T>& q, const num::Var<T>& k,
                                    const num::Var<T>& v, double scale) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.shape().size() != 4) {
    throw DimensionError("attention operands must share a [frames, D, h, w] shape");
  }
  for (const auto* t : {&q, &k, &v}) {
    if (!t->value().is_binary()) throw ContractError("spike attention requires binary Q, K, V");
  }
  const std::size_t frames = q.shape()[0], d = q.shape()[1], n = q.shape()[2] * q.shape()[3];
  num::DenseTensor<T> out(q.shape());
  std::vector<std::uint8_t> qb(n * d), kb(n * d), vb(n * d);
  const T s = static_cast<T>(scale);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t off = f * n * d;
    gather_tokens(q.value().data() + off, n, d, qb.data());
    gather_tokens(k.value().data() + off, n, d, kb.data());
    gather_tokens(v.value().data() + off, n, d, vb.data());
    const auto prod = n > d ? attention_right(qb, kb, vb, n, d) : attention_left(qb, kb, vb, n, d);
    T* dst = out.data() + off;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) dst[c * n + i] = static_cast<T>(prod[i * d + c]) * s;
    }
  }

  const bool grad = ctx.recording() && num::any_requires_grad<T>({&q, &k, &v});
  num::Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([q, k, v, result, frames, n, d, s]() mutable {
      if (!result.has_grad()) return;
      using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
      using CMap = Eigen::Map<const Mat>;
      using MMap = Eigen::Map<Mat>;
      for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t off = f * n * d;
        // Storage is [D, N]; token-major matrices are the transposes.
        const Mat qm = CMap(q.value().data() + off, d, n).transpose();
        const Mat km = CMap(k.value().data() + off, d, n).transpose();
        const Mat vm = CMap(v.value().data() + off, d, n).transpose();
        const Mat gm = CMap(result.grad().data() + off, d, n).transpose();
        if (q.requires_grad()) {
          MMap(q.grad_buffer().data() + off, d, n) += (s * gm * (vm.transpose() * km)).transpose();
        }
        if (k.requires_grad()) {
          MMap(k.grad_buffer().data() + off, d, n) += (s * vm * (gm.transpose() * qm)).transpose();
        }
        if (v.requires_grad()) {
          MMap(v.grad_buffer().data() + off, d, n) += (s * km * (qm.transpose() * gm)).transpose();
        }
      }
    });
  }
  num::finish_op(ctx, "spike_attention", {&q, &k, &v}, result, false, static_cast<double>(2 * n * d * d));
  return result;
}

template num::Var<float> spike_attention_product(num::Context<float>&, const num::Var<float>&, const num::Var<float>&,
                                                 const num::Var<float>&, double);
template num::Var<double> spike_attention_product(num::Context<double>&, const num::Var<double>&,
                                                  const num::Var<double>&, const num::Var<double>&, double);

}  // namespace sdt::model
