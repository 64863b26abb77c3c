// SPDX-License-Identifier: Apache-2.0
#include "sdt/io/spike_tensor.hpp"


#include "sdt/errors.hpp"

namespace sdt::io {

SpikeTensor::SpikeTensor(std::size_t t, std::size_t c, std::size_t h, std::size_t w)
    : t_(t), c_(c), h_(h), w_(w), bits_(payload_bytes(t * c * h * w), 0) {}

SpikeTensor::SpikeTensor(std::size_t t, std::size_t c, std::size_t h, std::size_t w, std::vector<std::uint8_t> bits)
    : t_(t), c_(c), h_(h), w_(w), bits_(std::move(bits)) {
  if (bits_.size() != payload_bytes(size())) {
    throw LengthError("spike payload has " + std::to_string(bits_.size()) + " bytes, expected " +
                      std::to_string(payload_bytes(size())));
  }
}

std::size_t SpikeTensor::count_ones() const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += get(i);
  return n;
}

template <typename T>
num::DenseTensor<T> SpikeTensor::to_dense() const {
  num::DenseTensor<T> out(num::Shape{t_, c_, h_, w_});
  for (std::size_t i = 0; i < size(); ++i) out[i] = get(i) ? T{1} : T{0};
  return out;
}

template <typename T>
SpikeTensor SpikeTensor::from_dense(const num::DenseTensor<T>& dense) {
  if (dense.rank() != 4) throw DimensionError("spike tensor needs rank 4, got " + num::to_string(dense.shape()));
  SpikeTensor out(dense.dim(0), dense.dim(1), dense.dim(2), dense.dim(3));
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != T{0} && dense[i] != T{1}) throw ContractError("spike tensor values must be 0 or 1");
    out.set(i, dense[i] == T{1});
  }
  return out;
}

template num::DenseTensor<float> SpikeTensor::to_dense<float>() const;
template num::DenseTensor<double> SpikeTensor::to_dense<double>() const;
template SpikeTensor SpikeTensor::from_dense<float>(const num::DenseTensor<float>&);
template SpikeTensor SpikeTensor::from_dense<double>(const num::DenseTensor<double>&);

}  // namespace sdt::io
