// SPDX-License-Identifier: Apache-2.0
#include "sdt/metrics/depth_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdt/errors.hpp"
#include "sdt/kv.hpp"

namespace sdt::metrics {

std::vector<std::pair<std::string, double>> MetricsReport::fields() const {
  return {{"abs_rel", abs_rel}, {"sq_rel", sq_rel}, {"mae", mae},       {"rmse_log", rmse_log},
          {"si_log", si_log},   {"delta1", delta1}, {"delta2", delta2}, {"delta3", delta3}};
}

std::string MetricsReport::to_kv(const std::string& prefix) const {
  std::ostringstream os;
  for (const auto& [k, v] : fields()) os << prefix << k << '=' << kv::number(v) << '\n';
  os << prefix << "n_valid=" << n_valid << '\n';
  return os.str();
}

std::string MetricsReport::csv_header() { return "abs_rel,sq_rel,mae,rmse_log,si_log,delta1,delta2,delta3,n_valid"; }

std::string MetricsReport::csv_row() const {
  std::ostringstream os;
  for (const auto& [k, v] : fields()) os << kv::number(v) << ',';
  os << n_valid;
  return os.str();
}

MetricsReport evaluate(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask,
                       double eps) {
  if (pred.size() != gt.size() || (!mask.empty() && mask.size() != gt.size())) {
    throw DimensionError("metric inputs differ in size");
  }
  MetricsReport r;
  double log_sum = 0.0, log_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double d = gt[i], p = pred[i];
    const double denom = std::max(d, eps);
    const double err = std::abs(d - p);
    r.abs_rel += err / denom;
    r.sq_rel += err * err / denom;
    r.mae += err;
    const double lr = std::log(denom) - std::log(std::max(p, eps));
    log_sum += lr;
    log_sq += lr * lr;
    const double ratio = std::max(std::max(p, eps) / denom, denom / std::max(p, eps));
    r.delta1 += ratio < 1.25 ? 1.0 : 0.0;
    r.delta2 += ratio < 1.25 * 1.25 ? 1.0 : 0.0;
    r.delta3 += ratio < 1.25 * 1.25 * 1.25 ? 1.0 : 0.0;
    ++n;
  }
  if (n == 0) throw EmptyMaskError("no valid pixels to evaluate");
  const double nn = static_cast<double>(n);
  r.abs_rel /= nn;
  r.sq_rel /= nn;
  r.mae /= nn;
  r.rmse_log = std::sqrt(log_sq / nn);
  const double lm = log_sum / nn;
  double var = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double lr = std::log(std::max(gt[i], eps)) - std::log(std::max(pred[i], eps)) - lm;
    var += lr * lr;
  }
  r.si_log = var / nn;
  r.delta1 /= nn;
  r.delta2 /= nn;
  r.delta3 /= nn;
  r.n_valid = n;
  return r;
}

MetricsReport evaluate(const io::DepthMap& pred, const io::DepthMap& gt, double eps) {
  if (pred.height != gt.height || pred.width != gt.width) throw DimensionError("depth maps differ in size");
  std::vector<double> p(pred.values.begin(), pred.values.end()), g(gt.values.begin(), gt.values.end());
  std::vector<std::uint8_t> mask(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) mask[i] = pred.valid(i) && gt.valid(i);
  return evaluate(p, g, mask, eps);
}

MetricsReport average(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw EmptyMaskError("no reports to average");
  MetricsReport out;
  for (const auto& r : reports) {
    out.abs_rel += r.abs_rel;
    out.sq_rel += r.sq_rel;
    out.mae += r.mae;
    out.rmse_log += r.rmse_log;
    out.si_log += r.si_log;
    out.delta1 += r.delta1;
    out.delta2 += r.delta2;
    out.delta3 += r.delta3;
    out.n_valid += r.n_valid;
  }
  const double n = static_cast<double>(reports.size());
  out.abs_rel /= n;
  out.sq_rel /= n;
  out.mae /= n;
  out.rmse_log /= n;
  out.si_log /= n;
  out.delta1 /= n;
  out.delta2 /= n;
  out.delta3 /= n;
  return out;
}

}  // namespace sdt::metrics
