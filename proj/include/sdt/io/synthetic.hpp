// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdt/io/formats.hpp"

namespace sdt::io {

/// Textured rectangle moving at constant velocity in front of the background.
struct SceneRect {
  double x = 0, y = 0;          // top-left corner at frame 0, pixels
  double width = 8, height = 8;
  double vx = 0, vy = 0;        // pixels per frame
  double depth = 0.5;           // normalized, background is 1.0
  double base = 0.5;            // mean intensity
  double amplitude = 0.3;       // grating contrast
  double freq_x = 0.5, freq_y = 0.3, phase = 0.0;
};

struct Scene {
  std::vector<SceneRect> rects;
  double background_depth = 1.0;
  double background_base = 0.4;
  double background_amplitude = 0.2;
  double background_freq_x = 0.21, background_freq_y = 0.17;
};

struct SyntheticParams {
  std::uint64_t seed = 7;
  std::size_t samples = 4;
  std::size_t timesteps = 4;
  std::size_t height = 64;
  std::size_t width = 64;
  double contrast_threshold = 0.15;
  double max_speed = 2.0;        // pixels per frame; 0 yields static scenes
  std::size_t min_rects = 2;
  std::size_t max_rects = 5;
  double min_depth = 0.35;       // rectangle depth range (normalized)
  double max_depth = 0.9;
  std::size_t teacher_dim = 16;  // 0 disables teacher features
  double teacher_noise = 0.05;
};

/// Renders `timesteps + 1` frames, thresholds per-pixel log-intensity changes
/// against a reference that resets on each event (channel 0 positive,
/// channel 1 negative), and reports ground truth depth at the last frame.
SampleTuple render_scene(const Scene& scene, const SyntheticParams& params, std::uint64_t noise_seed);

/// Deterministic procedural dataset: 2-5 rectangles at distinct depths per
/// sample. Throws DimensionError unless H and W are positive multiples of 8.
std::vector<SampleTuple> gen_synthetic(const SyntheticParams& params);

/// Smoothed soft-thermometer encoding of the depth map on the H/8 x W/8 grid
/// plus seeded Gaussian noise; stands in for frozen teacher features.
num::DenseTensor<float> synthetic_teacher_features(const DepthMap& depth, std::size_t dim, double noise,
                                                   std::uint64_t seed);

}  // namespace sdt::io
