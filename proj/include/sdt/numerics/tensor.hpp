// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sdt::num {

using Shape = std::vector<std::size_t>;

/// Storage aligned to Eigen's packet size, so vectorized kernels peel the
/// same way on every allocation and results are bit-reproducible.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Row-major dense tensor. Owns its storage; copies are deep.
template <typename T>
class DenseTensor {
 public:
  using value_type = T;

  DenseTensor() = default;
  explicit DenseTensor(Shape shape, T fill = T{0});
  DenseTensor(Shape shape, std::vector<T> data);

  static DenseTensor zeros(Shape shape) { return DenseTensor(std::move(shape)); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  AlignedVector<T>& storage() noexcept { return data_; }
  const AlignedVector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Same data under a new shape with equal element count.
  void reshape(Shape shape);
  DenseTensor reshaped(Shape shape) const;

  void fill(T value);
  bool is_binary() const noexcept;
  bool all_finite() const noexcept;

  template <typename U>
  DenseTensor<U> cast() const {
    return DenseTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

 private:
  Shape shape_;
  AlignedVector<T> data_;
};

extern template class DenseTensor<float>;
extern template class DenseTensor<double>;

}  // namespace sdt::num
