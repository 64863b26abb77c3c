// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "sdt/numerics/autograd.hpp"

namespace sdt::num {

/// Running statistics and constants of one batch-norm layer.
template <typename T>
struct BatchNormState {
  explicit BatchNormState(std::size_t channels)
      : running_mean(Shape{channels}, T{0}), running_var(Shape{channels}, T{1}) {}

  DenseTensor<T> running_mean;
  DenseTensor<T> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Cross-correlation of x[N,Cin,H,W] with w[Cout,Cin,k,k]; `bias` may be
/// undefined. Output [N,Cout,Ho,Wo], Ho = (H + 2*pad - k)/stride + 1.
template <typename T>
Var<T> conv2d(Context<T>& ctx, const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::size_t stride,
              std::size_t pad);

/// Per-channel normalization over every axis except 1. Training contexts use
/// batch statistics and update `state`; otherwise the running statistics.
template <typename T>
Var<T> batchnorm(Context<T>& ctx, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormState<T>& state);

/// Max over k x k windows of x[N,C,H,W]. Ties go to the first element in
/// row-major window order.
template <typename T>
Var<T> maxpool2d(Context<T>& ctx, const Var<T>& x, std::size_t kernel = 2, std::size_t stride = 2);

template <typename T>
Var<T> matmul(Context<T>& ctx, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> add(Context<T>& ctx, const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(Context<T>& ctx, const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(Context<T>& ctx, const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(Context<T>& ctx, const Var<T>& x, T factor);
template <typename T>
Var<T> sigmoid(Context<T>& ctx, const Var<T>& x);

/// Bilinear upsampling of x[N,C,H,W] by an integer factor, half-pixel
/// (align_corners = false) sampling with edge clamping.
template <typename T>
Var<T> upsample_bilinear(Context<T>& ctx, const Var<T>& x, std::size_t factor);

template <typename T>
Var<T> sum(Context<T>& ctx, const Var<T>& x);
template <typename T>
Var<T> mean(Context<T>& ctx, const Var<T>& x);
template <typename T>
Var<T> reshape(Context<T>& ctx, const Var<T>& x, Shape shape);

}  // namespace sdt::num
