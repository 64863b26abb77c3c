// SPDX-License-Identifier: Apache-2.0
#include "sdt/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "sdt/errors.hpp"

namespace sdt::num {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
DenseTensor<T>::DenseTensor(Shape shape, T fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

template <typename T>
DenseTensor<T>::DenseTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (numel(shape_) != data_.size()) {
    throw DimensionError("shape " + to_string(shape_) + " does not match " + std::to_string(data_.size()) +
                         " values");
  }
}

template <typename T>
std::size_t DenseTensor<T>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + to_string(shape_));
  }
  return shape_[axis];
}

template <typename T>
void DenseTensor<T>::reshape(Shape shape) {
  if (numel(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  shape_ = std::move(shape);
}

template <typename T>
DenseTensor<T> DenseTensor<T>::reshaped(Shape shape) const {
  DenseTensor out = *this;
  out.reshape(std::move(shape));
  return out;
}

template <typename T>
void DenseTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool DenseTensor<T>::is_binary() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return v == T{0} || v == T{1}; });
}

template <typename T>
bool DenseTensor<T>::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template class DenseTensor<float>;
template class DenseTensor<double>;

}  // namespace sdt::num
