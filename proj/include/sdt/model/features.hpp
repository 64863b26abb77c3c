// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "sdt/io/spike_tensor.hpp"
#include "sdt/numerics/autograd.hpp"

namespace sdt::model {

/// Per-block spike outputs F_1..F_L, each [T*B, D, H/8, W/8] time-major
/// (frame index t*B + b).
template <typename T>
struct BlockFeatures {
  std::vector<num::Var<T>> blocks;
  std::size_t steps = 0;
  std::size_t batch = 0;

  std::size_t size() const noexcept { return blocks.size(); }
  /// Block `index` (0-based) of sample `b` as a [T, D, h, w] spike tensor.
  io::SpikeTensor sample_spikes(std::size_t index, std::size_t b) const {
    const auto& v = blocks.at(index).value();
    const std::size_t d = v.dim(1), h = v.dim(2), w = v.dim(3), plane = d * h * w;
    num::DenseTensor<T> out(num::Shape{steps, d, h, w});
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t i = 0; i < plane; ++i) out[t * plane + i] = v[(t * batch + b) * plane + i];
    }
    return io::SpikeTensor::from_dense(out);
  }
};

}  // namespace sdt::model
