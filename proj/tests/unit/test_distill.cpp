// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "sdt/distill/losses.hpp"
#include "sdt/errors.hpp"
#include "sdt/model/sdt_model.hpp"
#include "test_support.hpp"

using namespace sdt;
namespace ts = sdt::test_support;
using num::DenseTensor;
using num::Shape;
using num::Var;

namespace {

io::DepthMap random_depth(std::size_t h, std::size_t w, Rng& rng, double invalid = 0.0) {
  io::DepthMap d(h, w);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d.values[i] = static_cast<float>(rng.uniform(0.05, 1.0));
    d.mask[i] = rng.uniform() < invalid ? 0 : 1;
  }
  return d;
}

/// Two-pass population variance of gt - pred over the mask.
double variance_oracle(const std::vector<double>& p, const std::vector<double>& g, const std::vector<std::uint8_t>& m) {
  double mean = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i]) {
      mean += g[i] - p[i];
      ++n;
    }
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i]) var += (g[i] - p[i] - mean) * (g[i] - p[i] - mean);
  }
  return var / static_cast<double>(n);
}

struct TinySetup {
  model::ModelConfig cfg = ts::tiny_config();
  model::SdtModel<double> net{cfg, 21};
  model::BlockFeatures<double> features;
  std::vector<io::DepthMap> gt;
  std::vector<DenseTensor<float>> teacher;
  std::vector<const DenseTensor<float>*> teacher_ptrs;

  explicit TinySetup(std::size_t batch = 2) {
    Rng rng(22);
    std::vector<io::SpikeTensor> spikes;
    for (std::size_t b = 0; b < batch; ++b) {
      spikes.push_back(ts::random_spikes(cfg.timesteps, cfg.channels, cfg.height, cfg.width, 0.3, rng));
      gt.push_back(random_depth(cfg.height, cfg.width, rng, 0.1));
      DenseTensor<float> t(Shape{16, cfg.grid_height(), cfg.grid_width()});
      for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
      teacher.push_back(std::move(t));
    }
    for (const auto& t : teacher) teacher_ptrs.push_back(&t);
    num::Context<double> ctx;
    ctx.training = true;
    features = net.backbone_forward(ctx, Var<double>(model::make_input<double>(spikes)));
  }
};

}  // namespace

TEST(PerceptualLoss, Examples) {
  Rng rng(1);
  const auto x = ts::random_tensor({3, 2, 2}, rng);
  EXPECT_EQ(distill::perceptual_loss(x, x), 0.0);
  auto shifted = x;
  for (auto& v : shifted.values()) v += 1.0;
  EXPECT_NEAR(distill::perceptual_loss(x, shifted), 1.0, 1e-12);
  DenseTensor<double> zero(x.shape());
  auto doubled = x;
  for (auto& v : doubled.values()) v *= 2.0;
  EXPECT_NEAR(distill::perceptual_loss(doubled, zero), 4.0 * distill::perceptual_loss(x, zero), 1e-12);
  EXPECT_THROW(distill::perceptual_loss(x, DenseTensor<double>(Shape{3, 2, 3})), DimensionError);
}

TEST(PerceptualLoss, TeacherNeverEntersTape) {
  Rng rng(2);
  Var<double> x(ts::random_tensor({2, 3}, rng), true);
  const auto teacher = ts::random_tensor({2, 3}, rng);
  num::Tape<double> tape;
  num::OpTrace trace;
  auto ctx = ts::recording(tape);
  ctx.trace = &trace;
  auto l = distill::perceptual_loss(ctx, x, teacher);
  EXPECT_NEAR(l.value()[0], distill::perceptual_loss(x.value(), teacher), 1e-12);
  ASSERT_EQ(trace.entries().size(), 1u);
  EXPECT_EQ(trace.entries()[0].inputs.size(), 1u);
  const auto check = ts::gradcheck([&](num::Context<double>& c) { return distill::perceptual_loss(c, x, teacher); },
                                   {x});
  EXPECT_TRUE(check.ok()) << check.worst;
}

TEST(SiLoss, Examples) {
  const std::vector<double> gt{1.0, 1.0}, pred{0.0, 2.0};
  const std::vector<std::uint8_t> all{1, 1};
  // r = {1, -1}: variance 1.
  EXPECT_DOUBLE_EQ(distill::si_l2_loss(pred, gt, all), 1.0);
  const std::vector<double> shifted{0.5, 0.5, 0.5}, target{0.25, 0.25, 0.25};
  EXPECT_DOUBLE_EQ(distill::si_l2_loss(shifted, target, std::vector<std::uint8_t>{1, 1, 1}), 0.0);
  EXPECT_THROW(distill::si_l2_loss(pred, gt, std::vector<std::uint8_t>{0, 0}), EmptyMaskError);
}

TEST(SiLoss, OffsetInvarianceAndNonNegativity) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = rng.integer(1, 64);
    std::vector<double> p(n), g(n), pc(n);
    std::vector<std::uint8_t> m(n);
    const double c = rng.uniform(-10.0, 10.0);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform(-2.0, 2.0);
      g[i] = rng.uniform(0.0, 3.0);
      pc[i] = p[i] + c;
      m[i] = rng.uniform() < 0.8 ? 1 : 0;
    }
    m[0] = 1;
    const double base = distill::si_l2_loss(p, g, m);
    EXPECT_GE(base, 0.0);
    EXPECT_NEAR(distill::si_l2_loss(pc, g, m), base, 1e-9);
    EXPECT_NEAR(base, variance_oracle(p, g, m), 1e-12);
  }
}

TEST(SiLoss, MaskAndLogDomain) {
  Rng rng(4);
  const auto gt = random_depth(4, 4, rng, 0.3);
  auto pred = random_depth(4, 4, rng);
  std::vector<double> p, g, l_p, l_g;
  std::vector<std::uint8_t> m;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    p.push_back(pred.values[i]);
    g.push_back(gt.values[i]);
    l_p.push_back(std::log(std::max(static_cast<double>(pred.values[i]), 1e-6)));
    l_g.push_back(std::log(std::max(static_cast<double>(gt.values[i]), 1e-6)));
    m.push_back(gt.mask[i]);
  }
  EXPECT_NEAR(distill::si_l2_loss(pred, gt), variance_oracle(p, g, m), 1e-9);
  EXPECT_NEAR(distill::si_l2_loss(pred, gt, true), variance_oracle(l_p, l_g, m), 1e-9);
  // Log domain: scaling the prediction is an offset of its log.
  for (auto& v : pred.values) v *= 3.0f;
  for (std::size_t i = 0; i < l_p.size(); ++i) l_p[i] = std::log(std::max(static_cast<double>(pred.values[i]), 1e-6));
  EXPECT_NEAR(distill::si_l2_loss(pred, gt, true), variance_oracle(l_p, l_g, m), 1e-9);
  io::DepthMap empty(2, 2);
  std::fill(empty.mask.begin(), empty.mask.end(), 0);
  EXPECT_THROW(distill::si_l2_loss(empty, empty), EmptyMaskError);
}

TEST(SiLoss, BatchedFormAveragesSamplesAndDifferentiates) {
  Rng rng(5);
  std::vector<io::DepthMap> gt{random_depth(3, 4, rng, 0.2), random_depth(3, 4, rng, 0.2)};
  Var<double> pred(ts::random_tensor({2, 1, 3, 4}, rng, 0.1, 0.9), true);
  num::Context<double> ctx;
  const double batched = distill::si_l2_loss(ctx, pred, std::span<const io::DepthMap>(gt)).value()[0];
  double expected = 0.0;
  for (std::size_t b = 0; b < 2; ++b) {
    io::DepthMap p(3, 4);
    for (std::size_t i = 0; i < 12; ++i) p.values[i] = static_cast<float>(pred.value()[b * 12 + i]);
    std::vector<double> pv(pred.value().data() + b * 12, pred.value().data() + (b + 1) * 12), gv;
    for (float v : gt[b].values) gv.push_back(v);
    expected += variance_oracle(pv, gv, gt[b].mask) / 2.0;
  }
  EXPECT_NEAR(batched, expected, 1e-12);
  const auto check = ts::gradcheck(
      [&](num::Context<double>& c) { return distill::si_l2_loss(c, pred, std::span<const io::DepthMap>(gt)); },
      {pred});
  EXPECT_TRUE(check.ok()) << check.worst;
  std::vector<io::DepthMap> wrong{gt[0]};
  EXPECT_THROW(distill::si_l2_loss(ctx, pred, std::span<const io::DepthMap>(wrong)), DimensionError);
}

TEST(DistillConfig, Validation) {
  distill::DistillConfig cfg;
  EXPECT_EQ(cfg.resolved_blocks(4), (std::vector<std::size_t>{4}));
  cfg.matched_blocks = {1, 3};
  EXPECT_NO_THROW(cfg.validate(4));
  cfg.matched_blocks = {5};
  EXPECT_THROW(cfg.validate(4), ConfigError);
  cfg.matched_blocks = {0};
  EXPECT_THROW(cfg.validate(4), ConfigError);
  cfg = distill::DistillConfig{};
  cfg.lambda_p = -1.0;
  EXPECT_THROW(cfg.validate(4), ConfigError);
}

TEST(Distiller, TotalCombinesTerms) {
  TinySetup s;
  distill::DistillConfig dc;
  dc.lambda_p = 0.5;
  dc.lambda_2 = 2.0;
  dc.matched_blocks = {2, 4};
  distill::Distiller<double> dist(s.cfg, dc, 3);
  num::Context<double> ctx;
  ctx.training = true;
  const auto pred = s.net.predict(ctx, s.features);
  const auto terms = dist.total_loss(ctx, s.features, pred, s.gt, s.teacher_ptrs);
  EXPECT_GT(terms.l_p, 0.0);
  EXPECT_NEAR(terms.l_2, distill::si_l2_loss(ctx, pred, std::span<const io::DepthMap>(s.gt)).value()[0], 1e-12);
  EXPECT_NEAR(terms.total.value()[0], 0.5 * terms.l_p + 2.0 * terms.l_2, 1e-12);

  dc.lambda_p = 0.0;
  distill::Distiller<double> no_p(s.cfg, dc, 3);
  const auto t0 = no_p.total_loss(ctx, s.features, pred, s.gt, s.teacher_ptrs);
  EXPECT_NEAR(t0.total.value()[0], 2.0 * t0.l_2, 1e-12);
}

TEST(Distiller, KdOffIsPureScaleInvariantLoss) {
  TinySetup s;
  distill::DistillConfig dc;
  dc.kd = false;
  distill::Distiller<double> dist(s.cfg, dc, 3);
  EXPECT_EQ(dist.adapters().param_count(), 0u);
  num::OpTrace trace;
  num::Context<double> ctx;
  ctx.trace = &trace;
  const auto pred = s.net.predict(ctx, s.features);
  const auto terms = dist.total_loss(ctx, s.features, pred, s.gt, {});
  EXPECT_FALSE(trace.contains_op("perceptual_loss"));
  EXPECT_EQ(terms.l_p, 0.0);
  EXPECT_DOUBLE_EQ(terms.total.value()[0], terms.l_2);
}

TEST(Distiller, TeacherErrors) {
  TinySetup s;
  distill::Distiller<double> dist(s.cfg, distill::DistillConfig{}, 3);
  num::Context<double> ctx;
  const auto pred = s.net.predict(ctx, s.features);
  std::vector<const DenseTensor<float>*> missing{s.teacher_ptrs[0], nullptr};
  EXPECT_THROW(dist.total_loss(ctx, s.features, pred, s.gt, missing), DataError);
  EXPECT_THROW(dist.total_loss(ctx, s.features, pred, s.gt, {}), DataError);
  DenseTensor<float> wrong(Shape{8, 2, 2});
  std::vector<const DenseTensor<float>*> bad{&wrong, &wrong};
  EXPECT_THROW(dist.total_loss(ctx, s.features, pred, s.gt, bad), DimensionError);
}

TEST(Distiller, TotalLossGradientOnTinyModel) {
  TinySetup s;
  distill::DistillConfig dc;
  dc.matched_blocks = {1, 4};
  distill::Distiller<double> dist(s.cfg, dc, 3);
  std::vector<Var<double>> params;
  for (const auto& p : s.net.store().params()) {
    if (p.name.rfind("head.", 0) == 0) params.push_back(p.var);
  }
  for (const auto& p : dist.adapters().params()) params.push_back(p.var);
  ASSERT_FALSE(params.empty());
  const auto check = ts::gradcheck(
      [&](num::Context<double>& c) {
        return dist.total_loss(c, s.features, s.net.predict(c, s.features), s.gt, s.teacher_ptrs).total;
      },
      params);
  EXPECT_TRUE(check.ok()) << check.fraction() << " worst " << check.worst;
}
