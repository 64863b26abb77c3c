// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sdt/numerics/tensor.hpp"

namespace sdt::num {

namespace detail {
std::uint64_t next_node_id() noexcept;
}  // namespace detail

template <typename T>
struct Node {
  DenseTensor<T> value;
  DenseTensor<T> grad;  // empty until a gradient reaches the node
  bool requires_grad = false;
  std::uint64_t id = 0;
};

/// Shared handle to a tensor participating in (optional) differentiation.
/// Copies alias the same node, so a parameter can be referenced from several
/// layers and from the optimizer at once.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(DenseTensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>(Node<T>{std::move(value), {}, requires_grad, detail::next_node_id()})) {}

  bool defined() const noexcept { return node_ != nullptr; }
  std::uint64_t id() const noexcept { return node_ ? node_->id : 0; }

  const DenseTensor<T>& value() const { return node_->value; }
  DenseTensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const noexcept { return node_ && !node_->grad.empty(); }
  const DenseTensor<T>& grad() const { return node_->grad; }
  /// Gradient buffer, zero-allocated on first access.
  DenseTensor<T>& grad_buffer() const {
    if (node_->grad.empty()) node_->grad = DenseTensor<T>(node_->value.shape());
    return node_->grad;
  }
  void zero_grad() const { node_->grad = DenseTensor<T>(); }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Reverse-mode tape: closures recorded in execution order and replayed
/// backwards. Single use per forward pass.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void()>;

  void record(Backward fn) {
    ops_.push_back(std::move(fn));
    consumed_ = false;
  }
  std::size_t size() const noexcept { return ops_.size(); }
  void clear() noexcept { ops_.clear(); }

  /// Seeds d(loss)/d(loss) = 1 and replays. Clears the tape afterwards; a
  /// second call without a new forward pass throws StaleTapeError.
  void backward(Var<T>& loss);

 private:
  std::vector<Backward> ops_;
  bool consumed_ = false;
};

/// One executed op, as seen by instrumentation passes.
struct TraceEntry {
  std::string op;
  std::string scope;
  std::vector<std::uint64_t> inputs;
  std::vector<bool> inputs_binary;
  std::vector<double> input_rates;  // mean value of each input
  std::uint64_t output = 0;
  Shape output_shape;
  bool output_binary = false;
  bool float_multiply = false;  // op multiplies two real-valued operands
  double macs_per_frame = 0.0;  // multiply-accumulates per leading-dim frame
  std::size_t frames = 0;
};

class OpTrace {
 public:
  void add(TraceEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<TraceEntry>& entries() const noexcept { return entries_; }
  void clear() noexcept { entries_.clear(); }
  bool contains_op(const std::string& op) const;

 private:
  std::vector<TraceEntry> entries_;
};

/// Execution context threaded through every op.
template <typename T>
struct Context {
  Tape<T>* tape = nullptr;    // null: inference, nothing recorded
  OpTrace* trace = nullptr;   // null: no instrumentation
  bool training = false;      // batch-norm statistics mode
  std::string scope;

  bool recording() const noexcept { return tape != nullptr; }
};

/// Appends a path component to the context scope for its lifetime.
template <typename T>
class ScopeGuard {
 public:
  ScopeGuard(Context<T>& ctx, const std::string& name) : ctx_(ctx), saved_(ctx.scope) {
    ctx_.scope = saved_.empty() ? name : saved_ + "." + name;
  }
  ~ScopeGuard() { ctx_.scope = saved_; }
  ScopeGuard(const ScopeGuard&) = delete;
  ScopeGuard& operator=(const ScopeGuard&) = delete;

 private:
  Context<T>& ctx_;
  std::string saved_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace sdt::num
