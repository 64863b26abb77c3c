// SPDX-License-Identifier: Apache-2.0
#include "sdt/neuron/lif.hpp"

#include <cmath>
#include <numbers>

#include "sdt/errors.hpp"
#include "sdt/numerics/op_support.hpp"

namespace sdt::neuron {

void LifParams::validate() const {
  if (!(tau >= 1.0)) throw ConfigError("lif tau must be >= 1, got " + std::to_string(tau));
  if (!(v_threshold > v_reset)) throw ConfigError("lif threshold must exceed reset potential");
  if (!(surrogate_alpha > 0.0)) throw ConfigError("surrogate alpha must be positive");
}

template <typename T>
num::DenseTensor<T> lif_step(LifState<T>& state, const num::DenseTensor<T>& input, const LifParams& params) {
  if (input.size() != state.v.size()) {
    throw DimensionError("lif_step input " + num::to_string(input.shape()) + " vs state " +
                         num::to_string(state.v.shape()));
  }
  num::require_finite(input, "lif_step input");
  const T inv_tau = static_cast<T>(1.0 / params.tau);
  const T theta = static_cast<T>(params.v_threshold);
  const T reset = static_cast<T>(params.v_reset);
  num::DenseTensor<T> spikes(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    T& v = state.v[i];
    v = v + (input[i] - v) * inv_tau;
    if (v >= theta) {
      spikes[i] = T{1};
      v = reset;
    }
  }
  return spikes;
}

double surrogate_grad(double x, double alpha) {
  const double u = std::numbers::pi * alpha * x / 2.0;
  return alpha / (2.0 * (1.0 + u * u));
}

template <typename T>
std::vector<T> lif_backward(std::span<const T> saved_v_pre_spike, std::span<const T> upstream_grad, std::size_t steps,
                            const LifParams& params) {
  if (steps == 0 || saved_v_pre_spike.size() != upstream_grad.size() || saved_v_pre_spike.size() % steps != 0) {
    throw DimensionError("lif_backward: saved trace and gradient do not match");
  }
  const std::size_t m = saved_v_pre_spike.size() / steps;
  const double leak = 1.0 - 1.0 / params.tau;
  std::vector<T> grad_in(saved_v_pre_spike.size());
  // Gradient w.r.t. the membrane after reset, carried backwards in time.
  std::vector<double> grad_v(m, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = t * m + j;
      const double h = saved_v_pre_spike[i];
      const bool fired = h >= params.v_threshold;
      // v_t = h_t (1 - s_t) + v_reset s_t with s_t detached in the reset path.
      const double grad_h =
          upstream_grad[i] * surrogate_grad(h - params.v_threshold, params.surrogate_alpha) + (fired ? 0.0 : grad_v[j]);
      grad_in[i] = static_cast<T>(grad_h / params.tau);
      grad_v[j] = grad_h * leak;
    }
  }
  return grad_in;
}

template <typename T>
MlifTrace<T> mlif_forward(const num::DenseTensor<T>& x, std::size_t steps, const LifParams& params) {
  if (steps == 0) throw DimensionError("mlif needs at least one time step");
  if (x.size() == 0 || x.shape().empty() || x.shape()[0] % steps != 0) {
    throw DimensionError("mlif: leading dim of " + num::to_string(x.shape()) + " not divisible by T=" +
                         std::to_string(steps));
  }
  num::require_finite(x, "mlif input");
  const std::size_t m = x.size() / steps;
  const T inv_tau = static_cast<T>(1.0 / params.tau);
  const T theta = static_cast<T>(params.v_threshold);
  const T reset = static_cast<T>(params.v_reset);

  MlifTrace<T> trace{num::DenseTensor<T>(x.shape()), std::vector<T>(x.size()), std::vector<T>(x.size())};
  std::vector<T> v(m, reset);
  const T* in = x.data();
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = t * m + j;
      T h = v[j] + (in[i] - v[j]) * inv_tau;
      trace.v_pre_spike[i] = h;
      if (h >= theta) {
        trace.spikes[i] = T{1};
        h = reset;
      }
      v[j] = h;
      trace.v_post_reset[i] = h;
    }
  }
  return trace;
}

template <typename T>
num::Var<T> mlif(num::Context<T>& ctx, const num::Var<T>& x, std::size_t steps, const LifParams& params) {
  auto run = mlif_forward(x.value(), steps, params);
  const bool grad = ctx.recording() && x.requires_grad();
  auto out = std::move(run.spikes);
  auto saved = std::move(run.v_pre_spike);
  num::Var<T> result(std::move(out), grad);
  if (grad) {
    ctx.tape->record([x, result, saved = std::move(saved), steps, params]() mutable {
      if (!result.has_grad()) return;
      const auto gin = lif_backward<T>(saved, result.grad().values(), steps, params);
      auto& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gin[i];
    });
  }
  num::finish_op(ctx, "mlif", {&x}, result);
  return result;
}

template num::DenseTensor<float> lif_step(LifState<float>&, const num::DenseTensor<float>&, const LifParams&);
template num::DenseTensor<double> lif_step(LifState<double>&, const num::DenseTensor<double>&, const LifParams&);
template std::vector<float> lif_backward(std::span<const float>, std::span<const float>, std::size_t,
                                         const LifParams&);
template std::vector<double> lif_backward(std::span<const double>, std::span<const double>, std::size_t,
                                          const LifParams&);
template MlifTrace<float> mlif_forward(const num::DenseTensor<float>&, std::size_t, const LifParams&);
template MlifTrace<double> mlif_forward(const num::DenseTensor<double>&, std::size_t, const LifParams&);
template num::Var<float> mlif(num::Context<float>&, const num::Var<float>&, std::size_t, const LifParams&);
template num::Var<double> mlif(num::Context<double>&, const num::Var<double>&, std::size_t, const LifParams&);

}  // namespace sdt::neuron
