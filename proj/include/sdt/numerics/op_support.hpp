// SPDX-License-Identifier: Apache-2.0
// Helpers shared by op implementations across modules.
#pragma once

#include <initializer_list>
#include <numeric>
#include <string>

#include "sdt/errors.hpp"
#include "sdt/numerics/autograd.hpp"

namespace sdt::num {

template <typename T>
bool any_requires_grad(std::initializer_list<const Var<T>*> inputs) {
  for (const Var<T>* v : inputs) {
    if (v && v->defined() && v->requires_grad()) return true;
  }
  return false;
}

template <typename T>
void require_finite(const DenseTensor<T>& t, const std::string& op) {
  if (!t.all_finite()) throw NumericError("non-finite value produced by " + op);
}

template <typename T>
double mean_value(const DenseTensor<T>& t) {
  if (t.empty()) return 0.0;
  double acc = 0.0;
  for (T v : t.values()) acc += static_cast<double>(v);
  return acc / static_cast<double>(t.size());
}

/// Finite check plus optional trace entry for an op that produced `out`.
template <typename T>
void finish_op(Context<T>& ctx, const std::string& op, std::initializer_list<const Var<T>*> inputs, const Var<T>& out,
               bool float_multiply = false, double macs_per_frame = 0.0) {
  require_finite(out.value(), op);
  if (!ctx.trace) return;
  TraceEntry e;
  e.op = op;
  e.scope = ctx.scope;
  for (const Var<T>* v : inputs) {
    if (!v || !v->defined()) continue;
    e.inputs.push_back(v->id());
    e.inputs_binary.push_back(v->value().is_binary());
    e.input_rates.push_back(mean_value(v->value()));
  }
  e.output = out.id();
  e.output_shape = out.shape();
  e.output_binary = out.value().is_binary();
  e.float_multiply = float_multiply;
  e.macs_per_frame = macs_per_frame;
  e.frames = out.shape().empty() ? 1 : out.shape()[0];
  ctx.trace->add(std::move(e));
}

}  // namespace sdt::num
