// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdt/numerics/tensor.hpp"

namespace sdt::io {

/// Bit-packed binary tensor over (T, C, H, W). Flat index
/// ((t*C + c)*H + h)*W + w, most significant bit first within each byte.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(std::size_t t, std::size_t c, std::size_t h, std::size_t w);
  /// Adopts an existing payload; throws LengthError on a size mismatch.
  SpikeTensor(std::size_t t, std::size_t c, std::size_t h, std::size_t w, std::vector<std::uint8_t> bits);

  std::size_t timesteps() const noexcept { return t_; }
  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t size() const noexcept { return t_ * c_ * h_ * w_; }
  static std::size_t payload_bytes(std::size_t count) noexcept { return (count + 7) / 8; }

  bool get(std::size_t flat) const noexcept { return (bits_[flat >> 3] >> (7 - (flat & 7))) & 1u; }
  void set(std::size_t flat, bool on) noexcept {
    const auto mask = static_cast<std::uint8_t>(1u << (7 - (flat & 7)));
    if (on) {
      bits_[flat >> 3] |= mask;
    } else {
      bits_[flat >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }
  std::size_t index(std::size_t t, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return ((t * c_ + c) * h_ + h) * w_ + w;
  }
  bool at(std::size_t t, std::size_t c, std::size_t h, std::size_t w) const noexcept { return get(index(t, c, h, w)); }

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  std::size_t count_ones() const noexcept;

  /// Dense [T, C, H, W] view with values 0/1.
  template <typename T>
  num::DenseTensor<T> to_dense() const;
  /// Packs a binary [T, C, H, W] tensor; throws ContractError on other values.
  template <typename T>
  static SpikeTensor from_dense(const num::DenseTensor<T>& dense);

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  std::size_t t_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace sdt::io
