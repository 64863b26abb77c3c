// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdt/numerics/autograd.hpp"

namespace sdt::model {

/// Binary matrices stored row-major as N x D (token-major), values 0/1.
/// Q * K^T as integers; every entry lies in [0, D].
std::vector<std::int32_t> spike_gram(std::span<const std::uint8_t> q, std::span<const std::uint8_t> k, std::size_t n,
                                     std::size_t d);
/// (Q K^T) V evaluated left to right in integer arithmetic, N x D.
std::vector<std::int32_t> attention_left(std::span<const std::uint8_t> q, std::span<const std::uint8_t> k,
                                         std::span<const std::uint8_t> v, std::size_t n, std::size_t d);
/// Q (K^T V) evaluated right to left in integer arithmetic, N x D.
std::vector<std::int32_t> attention_right(std::span<const std::uint8_t> q, std::span<const std::uint8_t> k,
                                          std::span<const std::uint8_t> v, std::size_t n, std::size_t d);

/// Spike-driven attention current s * (Q K^T) V per frame. Inputs are
/// [frames, D, h, w] spike tensors (token n = y*w + x, feature on axis 1); the
/// product is evaluated with integer counts, so no real-by-real multiply
/// occurs. No softmax: Q K^T is non-negative by construction. Throws
/// ContractError on non-binary input.
template <typename T>
num::Var<T> spike_attention_product(num::Context<T>& ctx, const num::Var<T>& q, const num::Var<T>& k,
                                    const num::Var<T>& v, double scale);

}  // namespace sdt::model
