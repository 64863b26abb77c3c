// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdt/io/formats.hpp"

namespace sdt::metrics {

/// Errors on normalized depth, over pixels valid in both maps.
struct MetricsReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double mae = 0.0;
  double rmse_log = 0.0;
  double si_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t n_valid = 0;

  /// Ordered (key, value) pairs for the eight metrics.
  std::vector<std::pair<std::string, double>> fields() const;
  std::string to_kv(const std::string& prefix = "") const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Raw-array form; `mask` may be empty (all valid).
MetricsReport evaluate(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask,
                       double eps = 1e-6);
MetricsReport evaluate(const io::DepthMap& pred, const io::DepthMap& gt, double eps = 1e-6);

/// Unweighted mean over samples in the given order; n_valid is summed.
/// Throws EmptyMaskError on an empty list.
MetricsReport average(std::span<const MetricsReport> reports);

}  // namespace sdt::metrics
