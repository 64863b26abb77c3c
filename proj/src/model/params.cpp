// SPDX-License-Identifier: Apache-2.0
#include "sdt/model/params.hpp"

#include <cmath>

#include "sdt/errors.hpp"

namespace sdt::model {

template <typename T>
num::Var<T> ParamStore<T>::add(const std::string& name, num::DenseTensor<T> init) {
  if (find(name).defined()) throw ConfigError("duplicate parameter " + name);
  num::Var<T> v(std::move(init), true);
  params_.push_back({name, v});
  return v;
}

template <typename T>
std::shared_ptr<num::BatchNormState<T>> ParamStore<T>::add_batchnorm(const std::string& name, std::size_t channels) {
  auto state = std::make_shared<num::BatchNormState<T>>(channels);
  batchnorms_.push_back({name, state});
  return state;
}

template <typename T>
num::Var<T> ParamStore<T>::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.var;
  }
  return {};
}

template <typename T>
std::size_t ParamStore<T>::param_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.var.size();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

template <typename T>
num::DenseTensor<T> kaiming_uniform(num::Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  num::DenseTensor<T> out(std::move(shape));
  for (T& v : out.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return out;
}

template <typename T>
num::Var<T> ConvBn<T>::forward(num::Context<T>& ctx, const num::Var<T>& x) const {
  auto y = num::conv2d(ctx, x, weight, bias, stride, pad);
  return num::batchnorm(ctx, y, gamma, beta, *stats);
}

template <typename T>
ConvBn<T> make_conv_bn(ParamStore<T>& store, const std::string& name, std::size_t cin, std::size_t cout,
                       std::size_t kernel, Rng& rng) {
  ConvBn<T> layer;
  layer.weight = store.add(name + ".weight", kaiming_uniform<T>({cout, cin, kernel, kernel}, cin * kernel * kernel, rng));
  layer.bias = store.add(name + ".bias", num::DenseTensor<T>(num::Shape{cout}));
  layer.gamma = store.add(name + ".bn.gamma", num::DenseTensor<T>(num::Shape{cout}, T{1}));
  layer.beta = store.add(name + ".bn.beta", num::DenseTensor<T>(num::Shape{cout}));
  layer.stats = store.add_batchnorm(name + ".bn", cout);
  layer.pad = kernel / 2;
  return layer;
}

template <typename T>
num::Var<T> Conv<T>::forward(num::Context<T>& ctx, const num::Var<T>& x) const {
  return num::conv2d(ctx, x, weight, bias, 1, weight.shape()[2] / 2);
}

template <typename T>
Conv<T> make_conv(ParamStore<T>& store, const std::string& name, std::size_t cin, std::size_t cout,
                  std::size_t kernel, Rng& rng) {
  Conv<T> layer;
  layer.weight = store.add(name + ".weight", kaiming_uniform<T>({cout, cin, kernel, kernel}, cin * kernel * kernel, rng));
  layer.bias = store.add(name + ".bias", num::DenseTensor<T>(num::Shape{cout}));
  return layer;
}

template class ParamStore<float>;
template class ParamStore<double>;
template struct ConvBn<float>;
template struct ConvBn<double>;
template struct Conv<float>;
template struct Conv<double>;
template num::DenseTensor<float> kaiming_uniform(num::Shape, std::size_t, Rng&);
template num::DenseTensor<double> kaiming_uniform(num::Shape, std::size_t, Rng&);
template ConvBn<float> make_conv_bn(ParamStore<float>&, const std::string&, std::size_t, std::size_t, std::size_t,
                                    Rng&);
template ConvBn<double> make_conv_bn(ParamStore<double>&, const std::string&, std::size_t, std::size_t, std::size_t,
                                     Rng&);
template Conv<float> make_conv(ParamStore<float>&, const std::string&, std::size_t, std::size_t, std::size_t, Rng&);
template Conv<double> make_conv(ParamStore<double>&, const std::string&, std::size_t, std::size_t, std::size_t, Rng&);

}  // namespace sdt::model
