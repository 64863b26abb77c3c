// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "sdt/numerics/autograd.hpp"

namespace sdt::train {

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping. max_norm <= 0 leaves gradients alone.
template <typename T>
double clip_grad_norm(std::vector<num::Var<T>>& params, double max_norm);

template <typename T>
class Adam {
 public:
  Adam(std::vector<num::Var<T>> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Applies one update from the current gradients (absent gradients count
  /// as zero) and clears them.
  void step();
  std::vector<num::Var<T>>& params() noexcept { return params_; }
  std::size_t steps() const noexcept { return t_; }

 private:
  std::vector<num::Var<T>> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace sdt::train
