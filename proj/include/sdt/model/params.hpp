// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sdt/numerics/autograd.hpp"
#include "sdt/numerics/ops.hpp"
#include "sdt/rng.hpp"

namespace sdt::model {

template <typename T>
struct NamedParam {
  std::string name;
  num::Var<T> var;
};

template <typename T>
struct NamedBatchNorm {
  std::string name;
  std::shared_ptr<num::BatchNormState<T>> state;
};

/// Ordered registry of trainable tensors and batch-norm running statistics.
/// Registration order fixes checkpoint layout and optimizer iteration order.
template <typename T>
class ParamStore {
 public:
  num::Var<T> add(const std::string& name, num::DenseTensor<T> init);
  std::shared_ptr<num::BatchNormState<T>> add_batchnorm(const std::string& name, std::size_t channels);

  const std::vector<NamedParam<T>>& params() const noexcept { return params_; }
  const std::vector<NamedBatchNorm<T>>& batchnorms() const noexcept { return batchnorms_; }
  /// Undefined Var when absent.
  num::Var<T> find(const std::string& name) const;

  /// Number of trainable scalars.
  std::size_t param_count() const noexcept;
  void zero_grad();

 private:
  std::vector<NamedParam<T>> params_;
  std::vector<NamedBatchNorm<T>> batchnorms_;
};

/// Kaiming-uniform fan-in initialization: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
template <typename T>
num::DenseTensor<T> kaiming_uniform(num::Shape shape, std::size_t fan_in, Rng& rng);

/// Convolution followed by batch norm; "same" padding for odd kernels.
template <typename T>
struct ConvBn {
  num::Var<T> weight, bias, gamma, beta;
  std::shared_ptr<num::BatchNormState<T>> stats;
  std::size_t stride = 1, pad = 0;

  num::Var<T> forward(num::Context<T>& ctx, const num::Var<T>& x) const;
  std::size_t in_channels() const { return weight.shape()[1]; }
  std::size_t out_channels() const { return weight.shape()[0]; }
};

template <typename T>
ConvBn<T> make_conv_bn(ParamStore<T>& store, const std::string& name, std::size_t cin, std::size_t cout,
                       std::size_t kernel, Rng& rng);

/// Plain convolution with bias (no normalization).
template <typename T>
struct Conv {
  num::Var<T> weight, bias;
  num::Var<T> forward(num::Context<T>& ctx, const num::Var<T>& x) const;
};

template <typename T>
Conv<T> make_conv(ParamStore<T>& store, const std::string& name, std::size_t cin, std::size_t cout,
                  std::size_t kernel, Rng& rng);

}  // namespace sdt::model
