// SPDX-License-Identifier: Apache-2.0
#include "sdt/train/optimizer.hpp"

#include <cmath>

#include "sdt/errors.hpp"

namespace sdt::train {

template <typename T>
double clip_grad_norm(std::vector<num::Var<T>>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad().values()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (max_norm > 0.0 && norm > max_norm) {
    const T k = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (T& g : p.grad_buffer().values()) g *= k;
    }
  }
  return norm;
}

template <typename T>
Adam<T>::Adam(std::vector<num::Var<T>> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const bool has = p.has_grad();
    auto& value = p.mutable_value();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = has ? static_cast<double>(p.grad()[j]) : 0.0;
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
      const double mh = m_[i][j] / c1, vh = v_[i][j] / c2;
      value[j] = static_cast<T>(static_cast<double>(value[j]) - lr_ * mh / (std::sqrt(vh) + eps_));
    }
    p.zero_grad();
  }
}

template double clip_grad_norm(std::vector<num::Var<float>>&, double);
template double clip_grad_norm(std::vector<num::Var<double>>&, double);
template class Adam<float>;
template class Adam<double>;

}  // namespace sdt::train
