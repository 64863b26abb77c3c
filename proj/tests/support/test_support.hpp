// SPDX-License-Identifier: Apache-2.0
// Shared helpers: finite-difference checks and small random fixtures.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sdt/io/formats.hpp"
#include "sdt/io/spike_tensor.hpp"
#include "sdt/model/config.hpp"
#include "sdt/numerics/autograd.hpp"
#include "sdt/numerics/ops.hpp"
#include "sdt/rng.hpp"

namespace sdt::test_support {

struct GradCheck {
  std::size_t coords = 0;
  std::size_t within = 0;  // coordinates with relative error <= tol
  double worst = 0.0;      // largest relative error seen
  double tol = 1e-4;

  double fraction() const { return coords ? static_cast<double>(within) / static_cast<double>(coords) : 1.0; }
  bool ok(double min_fraction = 0.95, double worst_cap = 1e-3) const {
    return coords > 0 && fraction() >= min_fraction && worst <= worst_cap;
  }
};

inline num::Context<double> recording(num::Tape<double>& tape, bool training = false) {
  num::Context<double> ctx;
  ctx.tape = &tape;
  ctx.training = training;
  return ctx;
}

inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Compares reverse-mode gradients of the scalar `loss` against central
/// differences for every coordinate of `wrt`. `loss` must rebuild the graph
/// from the current values on each call.
inline GradCheck gradcheck(const std::function<num::Var<double>(num::Context<double>&)>& loss,
                           std::vector<num::Var<double>> wrt, bool training = true, double h = 1e-5,
                           double tol = 1e-4) {
  for (auto& w : wrt) {
    w.set_requires_grad(true);
    w.zero_grad();
  }
  num::Tape<double> tape;
  num::Context<double> ctx;
  ctx.tape = &tape;
  ctx.training = training;
  auto out = loss(ctx);
  tape.backward(out);

  GradCheck r;
  r.tol = tol;
  num::Context<double> plain;
  plain.training = training;
  for (auto& w : wrt) {
    const auto analytic = w.has_grad() ? w.grad() : num::DenseTensor<double>(w.shape());
    auto& value = w.mutable_value();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + h;
      const double up = loss(plain).value()[0];
      value[i] = saved - h;
      const double down = loss(plain).value()[0];
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[i], numeric);
      ++r.coords;
      if (err <= tol) ++r.within;
      r.worst = std::max(r.worst, err);
    }
  }
  return r;
}

inline num::DenseTensor<double> random_tensor(num::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  num::DenseTensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline io::SpikeTensor random_spikes(std::size_t t, std::size_t c, std::size_t h, std::size_t w, double density,
                                     Rng& rng) {
  io::SpikeTensor s(t, c, h, w);
  for (std::size_t i = 0; i < s.size(); ++i) s.set(i, rng.uniform() < density);
  return s;
}

/// Weighted sum so that every output coordinate reaches the gradient.
inline num::Var<double> probe(num::Context<double>& ctx, const num::Var<double>& y, const num::DenseTensor<double>& w) {
  return num::sum(ctx, num::mul(ctx, y, num::Var<double>(w)));
}

/// Model small enough for coordinate-wise finite differences.
inline model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.timesteps = 2;
  cfg.channels = 2;
  cfg.height = 16;
  cfg.width = 16;
  cfg.embed_dim = 8;
  cfg.blocks = 4;
  cfg.mlp_ratio = 1;
  return cfg;
}

}  // namespace sdt::test_support
