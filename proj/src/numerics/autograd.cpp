// SPDX-License-Identifier: Apache-2.0
#include "sdt/numerics/autograd.hpp"

#include <algorithm>
#include <atomic>

#include "sdt/errors.hpp"

namespace sdt::num {

namespace detail {
std::uint64_t next_node_id() noexcept {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}
}  // namespace detail

template <typename T>
void Tape<T>::backward(Var<T>& loss) {
  if (ops_.empty()) {
    throw StaleTapeError(consumed_ ? "backward already ran for this forward pass" : "nothing recorded");
  }
  if (loss.size() != 1) {
    throw DimensionError("backward needs a scalar loss, got " + to_string(loss.shape()));
  }
  loss.grad_buffer()[0] += T{1};
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  ops_.clear();
  consumed_ = true;
}

bool OpTrace::contains_op(const std::string& op) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const TraceEntry& e) { return e.op == op; });
}

template class Tape<float>;
template class Tape<double>;

}  // namespace sdt::num
