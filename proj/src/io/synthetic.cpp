// SPDX-License-Identifier: Apache-2.0
#include "sdt/io/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdt/errors.hpp"
#include "sdt/rng.hpp"

namespace sdt::io {

namespace {

constexpr double kMinIntensity = 0.02;

void validate(const SyntheticParams& p) {
  if (p.height == 0 || p.width == 0 || p.height % 8 != 0 || p.width % 8 != 0) {
    throw DimensionError("height and width must be positive multiples of 8, got " + std::to_string(p.height) + "x" +
                         std::to_string(p.width));
  }
  if (p.timesteps == 0) throw DimensionError("timesteps must be positive");
  if (!(p.contrast_threshold > 0.0)) throw ConfigError("contrast threshold must be positive");
  if (p.min_rects == 0 || p.min_rects > p.max_rects) throw ConfigError("invalid rectangle count range");
  if (!(p.min_depth > 0.0 && p.min_depth < p.max_depth && p.max_depth < 1.0)) {
    throw ConfigError("rectangle depths must satisfy 0 < min_depth < max_depth < 1");
  }
}

bool covers(const SceneRect& r, double frame, double px, double py) {
  const double x0 = r.x + r.vx * frame, y0 = r.y + r.vy * frame;
  return px >= x0 && px < x0 + r.width && py >= y0 && py < y0 + r.height;
}

// Rectangles ordered far to near so nearer ones paint over farther ones.
std::vector<const SceneRect*> paint_order(const Scene& scene) {
  std::vector<const SceneRect*> order;
  for (const auto& r : scene.rects) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->depth > b->depth; });
  return order;
}

std::vector<double> render_log_intensity(const Scene& scene, const std::vector<const SceneRect*>& order, double frame,
                                         std::size_t h, std::size_t w) {
  std::vector<double> out(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      double v = scene.background_base +
                 scene.background_amplitude * std::sin(scene.background_freq_x * px + scene.background_freq_y * py);
      for (const SceneRect* r : order) {
        if (!covers(*r, frame, px, py)) continue;
        const double u = px - (r->x + r->vx * frame), s = py - (r->y + r->vy * frame);
        v = r->base + r->amplitude * std::sin(r->freq_x * u + r->freq_y * s + r->phase);
      }
      out[y * w + x] = std::log(std::max(v, kMinIntensity));
    }
  }
  return out;
}

}  // namespace

SampleTuple render_scene(const Scene& scene, const SyntheticParams& params, std::uint64_t noise_seed) {
  validate(params);
  const std::size_t h = params.height, w = params.width, steps = params.timesteps;
  const auto order = paint_order(scene);

  SampleTuple sample;
  sample.spikes = SpikeTensor(steps, 2, h, w);
  std::vector<double> reference = render_log_intensity(scene, order, 0.0, h, w);
  for (std::size_t t = 1; t <= steps; ++t) {
    const auto frame = render_log_intensity(scene, order, static_cast<double>(t), h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
      const double change = frame[i] - reference[i];
      if (change >= params.contrast_threshold) {
        sample.spikes.set(sample.spikes.index(t - 1, 0, i / w, i % w), true);
        reference[i] = frame[i];
      } else if (change <= -params.contrast_threshold) {
        sample.spikes.set(sample.spikes.index(t - 1, 1, i / w, i % w), true);
        reference[i] = frame[i];
      }
    }
  }

  double far = scene.background_depth;
  for (const auto& r : scene.rects) far = std::max(far, r.depth);
  sample.depth = DepthMap(h, w);
  const double last = static_cast<double>(steps);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double d = scene.background_depth;
      for (const auto& r : scene.rects) {
        if (covers(r, last, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) d = std::min(d, r.depth);
      }
      sample.depth.values[y * w + x] = static_cast<float>(d / far);
    }
  }
  if (params.teacher_dim > 0) {
    sample.teacher_features =
        synthetic_teacher_features(sample.depth, params.teacher_dim, params.teacher_noise, noise_seed);
  }
  return sample;
}

std::vector<SampleTuple> gen_synthetic(const SyntheticParams& params) {
  validate(params);
  Rng rng(params.seed);
  const double hh = static_cast<double>(params.height), ww = static_cast<double>(params.width);
  std::vector<SampleTuple> samples;
  samples.reserve(params.samples);
  for (std::size_t s = 0; s < params.samples; ++s) {
    Scene scene;
    scene.background_base = rng.uniform(0.3, 0.6);
    scene.background_amplitude = rng.uniform(0.1, 0.25);
    scene.background_freq_x = rng.uniform(0.1, 0.4);
    scene.background_freq_y = rng.uniform(0.1, 0.4);
    const auto count = static_cast<std::size_t>(rng.integer(params.min_rects, params.max_rects));
    std::vector<double> depths;
    while (depths.size() < count) {
      const double d = rng.uniform(params.min_depth, params.max_depth);
      const bool distinct = std::all_of(depths.begin(), depths.end(), [&](double o) { return std::abs(o - d) > 0.04; });
      if (distinct) depths.push_back(d);
    }
    for (double depth : depths) {
      SceneRect r;
      r.width = rng.uniform(ww / 6.0, ww / 2.5);
      r.height = rng.uniform(hh / 6.0, hh / 2.5);
      r.x = rng.uniform(-r.width / 4.0, ww - 3.0 * r.width / 4.0);
      r.y = rng.uniform(-r.height / 4.0, hh - 3.0 * r.height / 4.0);
      r.vx = rng.uniform(-params.max_speed, params.max_speed);
      r.vy = rng.uniform(-params.max_speed, params.max_speed);
      r.depth = depth;
      r.base = rng.uniform(0.3, 0.8);
      r.amplitude = rng.uniform(0.1, 0.25);
      r.freq_x = rng.uniform(0.2, 0.9);
      r.freq_y = rng.uniform(0.2, 0.9);
      r.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      scene.rects.push_back(r);
    }
    samples.push_back(render_scene(scene, params, rng.next()));
  }
  return samples;
}

num::DenseTensor<float> synthetic_teacher_features(const DepthMap& depth, std::size_t dim, double noise,
                                                   std::uint64_t seed) {
  if (depth.height % 8 != 0 || depth.width % 8 != 0 || depth.height == 0 || depth.width == 0) {
    throw DimensionError("teacher grid needs depth dims divisible by 8");
  }
  if (dim == 0) throw DimensionError("teacher feature dim must be positive");
  const std::size_t gh = depth.height / 8, gw = depth.width / 8;
  std::vector<double> cell(gh * gw, 1.0);
  for (std::size_t cy = 0; cy < gh; ++cy) {
    for (std::size_t cx = 0; cx < gw; ++cx) {
      double acc = 0.0;
      std::size_t n = 0;
      for (std::size_t y = cy * 8; y < cy * 8 + 8; ++y) {
        for (std::size_t x = cx * 8; x < cx * 8 + 8; ++x) {
          const std::size_t i = y * depth.width + x;
          if (!depth.valid(i)) continue;
          acc += depth.values[i];
          ++n;
        }
      }
      if (n) cell[cy * gw + cx] = acc / static_cast<double>(n);
    }
  }
  // 3x3 box blur with clamped borders.
  std::vector<double> smooth(gh * gw);
  for (std::size_t y = 0; y < gh; ++y) {
    for (std::size_t x = 0; x < gw; ++x) {
      double acc = 0.0;
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long yy = std::clamp(static_cast<long>(y) + dy, 0L, static_cast<long>(gh) - 1);
          const long xx = std::clamp(static_cast<long>(x) + dx, 0L, static_cast<long>(gw) - 1);
          acc += cell[static_cast<std::size_t>(yy) * gw + static_cast<std::size_t>(xx)];
        }
      }
      smooth[y * gw + x] = acc / 9.0;
    }
  }
  Rng rng(seed);
  num::DenseTensor<float> out(num::Shape{dim, gh, gw});
  for (std::size_t k = 0; k < dim; ++k) {
    const double center = (static_cast<double>(k) + 0.5) / static_cast<double>(dim);
    for (std::size_t i = 0; i < gh * gw; ++i) {
      out[k * gh * gw + i] = static_cast<float>(std::tanh(6.0 * (smooth[i] - center)) + noise * rng.normal());
    }
  }
  return out;
}

}  // namespace sdt::io
