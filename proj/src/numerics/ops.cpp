// SPDX-License-Identifier: Apache-2.0
#include "sdt/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "sdt/errors.hpp"
#include "sdt/numerics/op_support.hpp"

namespace sdt::num {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;
template <typename T>
using ConstMapVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using MapVec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + " expects rank " + std::to_string(rank) + ", got " + to_string(s));
  }
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw DimensionError(std::string(op) + " shape mismatch " + to_string(a) + " vs " + to_string(b));
}

struct ConvGeometry {
  std::size_t cin, h, w, k, stride, pad, ho, wo;
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  const std::size_t hw_out = g.ho * g.wo;
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = cols + ((c * g.k + ky) * g.k + kx) * hw_out;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          T* dst = row + oy * g.wo;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.wo, T{0});
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* x) {
  const std::size_t hw_out = g.ho * g.wo;
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = cols + ((c * g.k + ky) * g.k + kx) * hw_out;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          T* dst = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const T* src = row + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Source index pair and interpolation weight along one axis.
struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t factor) {
  std::vector<Tap> taps(in * factor);
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double src = (static_cast<double>(o) + 0.5) / static_cast<double>(factor) - 0.5;
    src = std::max(src, 0.0);
    auto lo = static_cast<std::size_t>(std::floor(src));
    lo = std::min(lo, in - 1);
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[o] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Var<T> conv2d(Context<T>& ctx, const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::size_t stride,
              std::size_t pad) {
  require_rank(x.shape(), 4, "conv2d input");
  require_rank(weight.shape(), 4, "conv2d weight");
  const std::size_t n = x.shape()[0], cin = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  const std::size_t cout = weight.shape()[0], k = weight.shape()[2];
  if (weight.shape()[3] != k) throw DimensionError("conv2d kernel must be square, got " + to_string(weight.shape()));
  if (weight.shape()[1] != cin) {
    throw DimensionError("conv2d channel mismatch: input " + to_string(x.shape()) + ", weight " +
                         to_string(weight.shape()));
  }
  if (bias.defined() && bias.size() != cout) throw DimensionError("conv2d bias size mismatch");
  if (stride == 0 || k == 0 || h + 2 * pad < k || w + 2 * pad < k) throw DimensionError("conv2d geometry");

  const ConvGeometry g{cin, h, w, k, stride, pad, (h + 2 * pad - k) / stride + 1, (w + 2 * pad - k) / stride + 1};
  const std::size_t hw_in = h * w, hw_out = g.ho * g.wo, patch = cin * k * k;
  const bool direct = k == 1 && stride == 1 && pad == 0;

  DenseTensor<T> out(Shape{n, cout, g.ho, g.wo});
  ConstMapMat<T> wm(weight.value().data(), cout, patch);
  AlignedVector<T> cols(direct ? 0 : patch * hw_out);
  for (std::size_t f = 0; f < n; ++f) {
    const T* xin = x.value().data() + f * cin * hw_in;
    MapMat<T> y(out.data() + f * cout * hw_out, cout, hw_out);
    if (direct) {
      y.noalias() = wm * ConstMapMat<T>(xin, cin, hw_in);
    } else {
      im2col(xin, g, cols.data());
      y.noalias() = wm * ConstMapMat<T>(cols.data(), patch, hw_out);
    }
    if (bias.defined()) y.colwise() += ConstMapVec<T>(bias.value().data(), cout);
  }

  const bool grad = ctx.recording() && any_requires_grad<T>({&x, &weight, &bias});
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([x, weight, bias, result, g, n, cout, direct]() mutable {
      if (!result.has_grad()) return;
      const std::size_t hw_in = g.h * g.w, hw_out = g.ho * g.wo, patch = g.cin * g.k * g.k;
      ConstMapMat<T> wm(weight.value().data(), cout, patch);
      AlignedVector<T> cols(direct ? 0 : patch * hw_out);
      AlignedVector<T> dcols(direct ? 0 : patch * hw_out);
      for (std::size_t f = 0; f < n; ++f) {
        ConstMapMat<T> gy(result.grad().data() + f * cout * hw_out, cout, hw_out);
        const T* xin = x.value().data() + f * g.cin * hw_in;
        if (weight.requires_grad()) {
          MapMat<T> gw(weight.grad_buffer().data(), cout, patch);
          if (direct) {
            gw.noalias() += gy * ConstMapMat<T>(xin, g.cin, hw_in).transpose();
          } else {
            im2col(xin, g, cols.data());
            gw.noalias() += gy * ConstMapMat<T>(cols.data(), patch, hw_out).transpose();
          }
        }
        if (bias.defined() && bias.requires_grad()) {
          MapVec<T>(bias.grad_buffer().data(), cout) += gy.rowwise().sum();
        }
        if (x.requires_grad()) {
          T* gx = x.grad_buffer().data() + f * g.cin * hw_in;
          if (direct) {
            MapMat<T>(gx, g.cin, hw_in).noalias() += wm.transpose() * gy;
          } else {
            MapMat<T>(dcols.data(), patch, hw_out).noalias() = wm.transpose() * gy;
            col2im_add(dcols.data(), g, gx);
          }
        }
      }
    });
  }
  finish_op(ctx, "conv2d", {&x, &weight, &bias}, result, !x.value().is_binary(),
            static_cast<double>(cout * patch * hw_out));
  return result;
}

template <typename T>
Var<T> batchnorm(Context<T>& ctx, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormState<T>& state) {
  if (x.shape().size() < 2) throw DimensionError("batchnorm expects [N,C,...], got " + to_string(x.shape()));
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  const std::size_t inner = numel(Shape(x.shape().begin() + 2, x.shape().end()));
  const std::size_t count = n * inner;
  if (c == 0 || count == 0) throw DimensionError("batchnorm over an empty channel " + to_string(x.shape()));
  if (gamma.size() != c || beta.size() != c || state.running_mean.size() != c || state.running_var.size() != c) {
    throw DimensionError("batchnorm parameters do not match " + std::to_string(c) + " channels");
  }

  std::vector<double> mu(c), inv_std(c);
  const T* xd = x.value().data();
  if (ctx.training) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t f = 0; f < n; ++f) {
        const T* p = xd + (f * c + ch) * inner;
        for (std::size_t i = 0; i < inner; ++i) s += p[i];
      }
      mu[ch] = s / static_cast<double>(count);
      for (std::size_t f = 0; f < n; ++f) {
        const T* p = xd + (f * c + ch) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          const double d = p[i] - mu[ch];
          s2 += d * d;
        }
      }
      const double var = s2 / static_cast<double>(count);
      inv_std[ch] = 1.0 / std::sqrt(var + state.eps);
      const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
      const double m = state.momentum;
      state.running_mean[ch] = static_cast<T>((1.0 - m) * state.running_mean[ch] + m * mu[ch]);
      state.running_var[ch] = static_cast<T>((1.0 - m) * state.running_var[ch] + m * unbiased);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = state.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(static_cast<double>(state.running_var[ch]) + state.eps);
    }
  }

  DenseTensor<T> xhat(x.shape());
  DenseTensor<T> out(x.shape());
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (f * c + ch) * inner;
      const T m = static_cast<T>(mu[ch]), is = static_cast<T>(inv_std[ch]);
      const T gm = gamma.value()[ch], bt = beta.value()[ch];
      for (std::size_t i = 0; i < inner; ++i) {
        const T xh = (xd[off + i] - m) * is;
        xhat[off + i] = xh;
        out[off + i] = gm * xh + bt;
      }
    }
  }

  const bool grad = ctx.recording() && any_requires_grad<T>({&x, &gamma, &beta});
  Var<T> result(std::move(out), grad);
  if (grad) {
    const bool batch_stats = ctx.training;
    ctx.tape->record([x, gamma, beta, result, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, inner,
                      count, batch_stats]() mutable {
      if (!result.has_grad()) return;
      const T* gy = result.grad().data();
      for (std::size_t ch = 0; ch < c; ++ch) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t f = 0; f < n; ++f) {
          const std::size_t off = (f * c + ch) * inner;
          for (std::size_t i = 0; i < inner; ++i) {
            sum_g += gy[off + i];
            sum_gx += static_cast<double>(gy[off + i]) * xhat[off + i];
          }
        }
        if (gamma.requires_grad()) gamma.grad_buffer()[ch] += static_cast<T>(sum_gx);
        if (beta.requires_grad()) beta.grad_buffer()[ch] += static_cast<T>(sum_g);
        if (!x.requires_grad()) continue;
        T* gx = x.grad_buffer().data();
        const double scale_ch = gamma.value()[ch] * inv_std[ch];
        const double mean_g = sum_g / static_cast<double>(count);
        const double mean_gx = sum_gx / static_cast<double>(count);
        for (std::size_t f = 0; f < n; ++f) {
          const std::size_t off = (f * c + ch) * inner;
          for (std::size_t i = 0; i < inner; ++i) {
            const double g = batch_stats ? gy[off + i] - mean_g - xhat[off + i] * mean_gx : gy[off + i];
            gx[off + i] += static_cast<T>(scale_ch * g);
          }
        }
      }
    });
  }
  finish_op(ctx, "batchnorm", {&x, &gamma, &beta}, result);
  return result;
}

template <typename T>
Var<T> maxpool2d(Context<T>& ctx, const Var<T>& x, std::size_t kernel, std::size_t stride) {
  require_rank(x.shape(), 4, "maxpool2d");
  const std::size_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  if (kernel == 0 || stride == 0 || h % stride != 0 || w % stride != 0 || h < kernel || w < kernel) {
    throw DimensionError("maxpool2d: spatial dims " + to_string(x.shape()) + " not divisible by stride " +
                         std::to_string(stride));
  }
  const std::size_t ho = (h - kernel) / stride + 1, wo = (w - kernel) / stride + 1;
  DenseTensor<T> out(Shape{n, c, ho, wo});
  std::vector<std::size_t> argmax(out.size());
  const T* xd = x.value().data();
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = base + (oy * stride) * w + ox * stride;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = base + (oy * stride + ky) * w + ox * stride + kx;
            if (xd[idx] > xd[best]) best = idx;
          }
        }
        const std::size_t o = (plane * ho + oy) * wo + ox;
        out[o] = xd[best];
        argmax[o] = best;
      }
    }
  }
  const bool grad = ctx.recording() && x.requires_grad();
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([x, result, argmax = std::move(argmax)]() mutable {
      if (!result.has_grad()) return;
      T* gx = x.grad_buffer().data();
      const T* gy = result.grad().data();
      for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += gy[o];
    });
  }
  finish_op(ctx, "maxpool2d", {&x}, result);
  return result;
}

template <typename T>
Var<T> matmul(Context<T>& ctx, const Var<T>& a, const Var<T>& b) {
  require_rank(a.shape(), 2, "matmul lhs");
  require_rank(b.shape(), 2, "matmul rhs");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul inner dimension mismatch " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  DenseTensor<T> out(Shape{m, n});
  MapMat<T>(out.data(), m, n).noalias() =
      ConstMapMat<T>(a.value().data(), m, k) * ConstMapMat<T>(b.value().data(), k, n);
  const bool grad = ctx.recording() && any_requires_grad<T>({&a, &b});
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([a, b, result, m, k, n]() mutable {
      if (!result.has_grad()) return;
      ConstMapMat<T> gy(result.grad().data(), m, n);
      if (a.requires_grad()) {
        MapMat<T>(a.grad_buffer().data(), m, k).noalias() += gy * ConstMapMat<T>(b.value().data(), k, n).transpose();
      }
      if (b.requires_grad()) {
        MapMat<T>(b.grad_buffer().data(), k, n).noalias() += ConstMapMat<T>(a.value().data(), m, k).transpose() * gy;
      }
    });
  }
  const bool float_mul = !a.value().is_binary() && !b.value().is_binary();
  finish_op(ctx, "matmul", {&a, &b}, result, float_mul, static_cast<double>(m * k * n));
  return result;
}

template <typename T>
Var<T> add(Context<T>& ctx, const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "add");
  DenseTensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  const bool grad = ctx.recording() && any_requires_grad<T>({&a, &b});
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([a, b, result]() mutable {
      if (!result.has_grad()) return;
      const auto& gy = result.grad();
      for (const Var<T>* v : {&a, &b}) {
        if (!v->requires_grad()) continue;
        auto& g = v->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
      }
    });
  }
  finish_op(ctx, "add", {&a, &b}, result);
  return result;
}

template <typename T>
Var<T> sub(Context<T>& ctx, const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "sub");
  DenseTensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  const bool grad = ctx.recording() && any_requires_grad<T>({&a, &b});
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([a, b, result]() mutable {
      if (!result.has_grad()) return;
      const auto& gy = result.grad();
      if (a.requires_grad()) {
        auto& g = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto& g = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gy[i];
      }
    });
  }
  finish_op(ctx, "sub", {&a, &b}, result);
  return result;
}

template <typename T>
Var<T> mul(Context<T>& ctx, const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "mul");
  DenseTensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  const bool grad = ctx.recording() && any_requires_grad<T>({&a, &b});
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([a, b, result]() mutable {
      if (!result.has_grad()) return;
      const auto& gy = result.grad();
      if (a.requires_grad()) {
        auto& g = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * b.value()[i];
      }
      if (b.requires_grad()) {
        auto& g = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * a.value()[i];
      }
    });
  }
  const bool float_mul = !a.value().is_binary() && !b.value().is_binary();
  finish_op(ctx, "mul", {&a, &b}, result, float_mul);
  return result;
}

template <typename T>
Var<T> scale(Context<T>& ctx, const Var<T>& x, T factor) {
  DenseTensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * factor;
  const bool grad = ctx.recording() && x.requires_grad();
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([x, result, factor]() mutable {
      if (!result.has_grad()) return;
      auto& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += result.grad()[i] * factor;
    });
  }
  finish_op(ctx, "scale", {&x}, result);
  return result;
}

template <typename T>
Var<T> sigmoid(Context<T>& ctx, const Var<T>& x) {
  DenseTensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x.value()[i];
    out[i] = v >= 0 ? T{1} / (T{1} + std::exp(-v)) : std::exp(v) / (T{1} + std::exp(v));
  }
  const bool grad = ctx.recording() && x.requires_grad();
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([x, result]() mutable {
      if (!result.has_grad()) return;
      auto& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T y = result.value()[i];
        g[i] += result.grad()[i] * y * (T{1} - y);
      }
    });
  }
  finish_op(ctx, "sigmoid", {&x}, result);
  return result;
}

template <typename T>
Var<T> upsample_bilinear(Context<T>& ctx, const Var<T>& x, std::size_t factor) {
  require_rank(x.shape(), 4, "upsample_bilinear");
  if (factor == 0) throw DimensionError("upsample factor must be positive");
  const std::size_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  if (h == 0 || w == 0) throw DimensionError("upsample of empty plane");
  const std::size_t ho = h * factor, wo = w * factor;
  const auto ty = bilinear_taps(h, factor);
  const auto tx = bilinear_taps(w, factor);

  DenseTensor<T> out(Shape{n, c, ho, wo});
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = x.value().data() + plane * h * w;
    T* dst = out.data() + plane * ho * wo;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      const T fy = static_cast<T>(ty[oy].frac);
      const T* r0 = src + ty[oy].lo * w;
      const T* r1 = src + ty[oy].hi * w;
      for (std::size_t ox = 0; ox < wo; ++ox) {
        const T fx = static_cast<T>(tx[ox].frac);
        const T top = r0[tx[ox].lo] * (T{1} - fx) + r0[tx[ox].hi] * fx;
        const T bot = r1[tx[ox].lo] * (T{1} - fx) + r1[tx[ox].hi] * fx;
        dst[oy * wo + ox] = top * (T{1} - fy) + bot * fy;
      }
    }
  }
  const bool grad = ctx.recording() && x.requires_grad();
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([x, result, ty, tx, n, c, h, w, ho, wo]() mutable {
      if (!result.has_grad()) return;
      for (std::size_t plane = 0; plane < n * c; ++plane) {
        T* gx = x.grad_buffer().data() + plane * h * w;
        const T* gy = result.grad().data() + plane * ho * wo;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const T fy = static_cast<T>(ty[oy].frac);
          T* r0 = gx + ty[oy].lo * w;
          T* r1 = gx + ty[oy].hi * w;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const T fx = static_cast<T>(tx[ox].frac);
            const T g = gy[oy * wo + ox];
            r0[tx[ox].lo] += g * (T{1} - fy) * (T{1} - fx);
            r0[tx[ox].hi] += g * (T{1} - fy) * fx;
            r1[tx[ox].lo] += g * fy * (T{1} - fx);
            r1[tx[ox].hi] += g * fy * fx;
          }
        }
      }
    });
  }
  finish_op(ctx, "upsample_bilinear", {&x}, result);
  return result;
}

template <typename T>
Var<T> sum(Context<T>& ctx, const Var<T>& x) {
  double acc = 0.0;
  for (T v : x.value().values()) acc += v;
  const bool grad = ctx.recording() && x.requires_grad();
  Var<T> result(DenseTensor<T>(Shape{}, static_cast<T>(acc)), grad);
  if (grad) {
    ctx.tape->record([x, result]() mutable {
      if (!result.has_grad()) return;
      const T g0 = result.grad()[0];
      for (T& g : x.grad_buffer().values()) g += g0;
    });
  }
  finish_op(ctx, "sum", {&x}, result);
  return result;
}

template <typename T>
Var<T> mean(Context<T>& ctx, const Var<T>& x) {
  if (x.size() == 0) throw DimensionError("mean of an empty tensor");
  return scale(ctx, sum(ctx, x), static_cast<T>(1.0 / static_cast<double>(x.size())));
}

template <typename T>
Var<T> reshape(Context<T>& ctx, const Var<T>& x, Shape shape) {
  DenseTensor<T> out = x.value().reshaped(std::move(shape));
  const bool grad = ctx.recording() && x.requires_grad();
  Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([x, result]() mutable {
      if (!result.has_grad()) return;
      auto& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += result.grad()[i];
    });
  }
  return result;
}

#define SDT_INSTANTIATE_OPS(T)                                                                                  \
  template Var<T> conv2d(Context<T>&, const Var<T>&, const Var<T>&, const Var<T>&, std::size_t, std::size_t); \
  template Var<T> batchnorm(Context<T>&, const Var<T>&, const Var<T>&, const Var<T>&, BatchNormState<T>&);    \
  template Var<T> maxpool2d(Context<T>&, const Var<T>&, std::size_t, std::size_t);                            \
  template Var<T> matmul(Context<T>&, const Var<T>&, const Var<T>&);                                          \
  template Var<T> add(Context<T>&, const Var<T>&, const Var<T>&);                                             \
  template Var<T> sub(Context<T>&, const Var<T>&, const Var<T>&);                                             \
  template Var<T> mul(Context<T>&, const Var<T>&, const Var<T>&);                                             \
  template Var<T> scale(Context<T>&, const Var<T>&, T);                                                       \
  template Var<T> sigmoid(Context<T>&, const Var<T>&);                                                        \
  template Var<T> upsample_bilinear(Context<T>&, const Var<T>&, std::size_t);                                 \
  template Var<T> sum(Context<T>&, const Var<T>&);                                                            \
  template Var<T> mean(Context<T>&, const Var<T>&);                                                           \
  template Var<T> reshape(Context<T>&, const Var<T>&, Shape);

SDT_INSTANTIATE_OPS(float)
SDT_INSTANTIATE_OPS(double)

}  // namespace sdt::num
