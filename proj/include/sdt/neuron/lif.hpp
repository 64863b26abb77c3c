// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdt/numerics/autograd.hpp"

namespace sdt::neuron {

/// Leaky integrate-and-fire constants. tau is in simulation steps.
struct LifParams {
  double tau = 2.0;
  double v_threshold = 1.0;
  double v_reset = 0.0;
  double surrogate_alpha = 2.0;

  /// Throws ConfigError unless tau >= 1 and v_threshold > v_reset.
  void validate() const;

  friend bool operator==(const LifParams&, const LifParams&) = default;
};

/// Membrane potential of a population of neurons.
template <typename T>
struct LifState {
  explicit LifState(std::size_t neurons, const LifParams& params)
      : v(num::Shape{neurons}, static_cast<T>(params.v_reset)) {}
  void reset(const LifParams& params) { v.fill(static_cast<T>(params.v_reset)); }

  num::DenseTensor<T> v;
};

/// One explicit-Euler step (dt = 1): v += (input - v) / tau, spike where
/// v >= threshold, hard reset of spiking neurons. Returns the 0/1 spike plane.
template <typename T>
num::DenseTensor<T> lif_step(LifState<T>& state, const num::DenseTensor<T>& input, const LifParams& params);

/// Arctan surrogate for d(spike)/d(v) at distance x = v - threshold.
double surrogate_grad(double x, double alpha);

/// Full record of a multistep LIF run: spikes, membrane before the
/// threshold test, and membrane after reset, each time-major like the input.
template <typename T>
struct MlifTrace {
  num::DenseTensor<T> spikes;
  std::vector<T> v_pre_spike;
  std::vector<T> v_post_reset;
};

/// Non-recording multistep LIF; see mlif.
template <typename T>
MlifTrace<T> mlif_forward(const num::DenseTensor<T>& x, std::size_t steps, const LifParams& params);

/// Multistep LIF over x whose leading dimension holds `steps` time slices
/// (time-major; each slice is x.size()/steps contiguous neurons). State starts
/// at v_reset. Output is binary with the shape of x. On a recording context the
/// backward pass uses the surrogate with a detached reset.
template <typename T>
num::Var<T> mlif(num::Context<T>& ctx, const num::Var<T>& x, std::size_t steps, const LifParams& params);

/// Backward through time for mlif given the saved pre-reset membrane values
/// (time-major, `steps` slices). Returns d(loss)/d(input).
template <typename T>
std::vector<T> lif_backward(std::span<const T> saved_v_pre_spike, std::span<const T> upstream_grad, std::size_t steps,
                            const LifParams& params);

}  // namespace sdt::neuron
