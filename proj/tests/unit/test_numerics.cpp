// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sdt/errors.hpp"
#include "sdt/numerics/ops.hpp"
#include "test_support.hpp"

using namespace sdt;
namespace ts = sdt::test_support;
using num::Context;
using num::DenseTensor;
using num::Shape;
using num::Tape;
using num::Var;

namespace {

Var<double> leaf(DenseTensor<double> t, bool grad = false) { return Var<double>(std::move(t), grad); }

}  // namespace

TEST(DenseTensor, SizeMustMatchShape) {
  EXPECT_THROW(DenseTensor<float>(Shape{2, 3}, std::vector<float>(5)), DimensionError);
  DenseTensor<float> t(Shape{2, 3}, 1.5f);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.dim(1), 3u);
  EXPECT_THROW(t.reshape(Shape{4, 2}), DimensionError);
  t.reshape(Shape{3, 2});
  EXPECT_EQ(t.shape(), (Shape{3, 2}));
}

TEST(DenseTensor, BinaryAndFiniteFlags) {
  DenseTensor<double> t(Shape{3}, std::vector<double>{0, 1, 1});
  EXPECT_TRUE(t.is_binary());
  t[1] = 0.5;
  EXPECT_FALSE(t.is_binary());
  EXPECT_TRUE(t.all_finite());
  t[2] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.all_finite());
}

TEST(Conv2d, OnesKernelCenterIsNine) {
  Context<double> ctx;
  auto x = leaf(DenseTensor<double>(Shape{1, 1, 3, 3}, 1.0));
  auto w = leaf(DenseTensor<double>(Shape{1, 1, 3, 3}, 1.0));
  const auto y = num::conv2d(ctx, x, w, Var<double>(), 1, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  EXPECT_DOUBLE_EQ(y.value()[4], 9.0);
  EXPECT_DOUBLE_EQ(y.value()[0], 4.0);
  EXPECT_DOUBLE_EQ(y.value()[1], 6.0);
}

TEST(Conv2d, IdentityKernelLeavesInputUnchanged) {
  Rng rng(3);
  Context<double> ctx;
  auto x = leaf(ts::random_tensor({2, 1, 5, 4}, rng));
  auto w = leaf(DenseTensor<double>(Shape{1, 1, 1, 1}, 1.0));
  auto b = leaf(DenseTensor<double>(Shape{1}, 0.0));
  const auto y = num::conv2d(ctx, x, w, b, 1, 0);
  EXPECT_EQ(y.value().storage(), x.value().storage());
}

TEST(Conv2d, OutputShapeAndMismatch) {
  Rng rng(4);
  Context<double> ctx;
  auto x = leaf(ts::random_tensor({2, 3, 8, 8}, rng));
  auto w = leaf(ts::random_tensor({4, 3, 3, 3}, rng));
  EXPECT_EQ(num::conv2d(ctx, x, w, Var<double>(), 1, 1).shape(), (Shape{2, 4, 8, 8}));
  auto bad = leaf(ts::random_tensor({4, 2, 3, 3}, rng));
  EXPECT_THROW(num::conv2d(ctx, x, bad, Var<double>(), 1, 1), DimensionError);
}

TEST(BatchNorm, StandardizedInputPassesThrough) {
  Context<double> ctx;
  ctx.training = true;
  // Two samples per channel at -1 and +1: mean 0, population variance 1.
  auto x = leaf(DenseTensor<double>(Shape{2, 1, 1, 1}, std::vector<double>{-1.0, 1.0}));
  auto gamma = leaf(DenseTensor<double>(Shape{1}, 1.0));
  auto beta = leaf(DenseTensor<double>(Shape{1}, 0.0));
  num::BatchNormState<double> st(1);
  const auto y = num::batchnorm(ctx, x, gamma, beta, st);
  EXPECT_NEAR(y.value()[0], -1.0, 1e-5);
  EXPECT_NEAR(y.value()[1], 1.0, 1e-5);
}

TEST(BatchNorm, ConstantChannelYieldsBeta) {
  Context<double> ctx;
  ctx.training = true;
  auto x = leaf(DenseTensor<double>(Shape{3, 1, 2, 2}, 4.25));
  auto gamma = leaf(DenseTensor<double>(Shape{1}, 3.0));
  auto beta = leaf(DenseTensor<double>(Shape{1}, -0.5));
  num::BatchNormState<double> st(1);
  const auto y = num::batchnorm(ctx, x, gamma, beta, st);
  for (double v : y.value().values()) EXPECT_DOUBLE_EQ(v, -0.5);
}

TEST(BatchNorm, AffineOnStandardizedInput) {
  Context<double> ctx;
  ctx.training = true;
  auto x = leaf(DenseTensor<double>(Shape{2, 1, 1, 1}, std::vector<double>{-1.0, 1.0}));
  auto gamma = leaf(DenseTensor<double>(Shape{1}, 2.0));
  auto beta = leaf(DenseTensor<double>(Shape{1}, 1.0));
  num::BatchNormState<double> st(1);
  const auto y = num::batchnorm(ctx, x, gamma, beta, st);
  EXPECT_NEAR(y.value()[0], -1.0, 1e-5);
  EXPECT_NEAR(y.value()[1], 3.0, 1e-5);
}

TEST(BatchNorm, RunningStatsAndEvalMode) {
  Context<double> train;
  train.training = true;
  auto x = leaf(DenseTensor<double>(Shape{2, 1, 1, 1}, std::vector<double>{1.0, 3.0}));
  auto gamma = leaf(DenseTensor<double>(Shape{1}, 1.0));
  auto beta = leaf(DenseTensor<double>(Shape{1}, 0.0));
  num::BatchNormState<double> st(1);
  num::batchnorm(train, x, gamma, beta, st);
  // mean 2, unbiased variance 2, momentum 0.1 from (0, 1).
  EXPECT_NEAR(st.running_mean[0], 0.2, 1e-12);
  EXPECT_NEAR(st.running_var[0], 0.9 + 0.2, 1e-12);
  Context<double> eval;
  const auto y = num::batchnorm(eval, x, gamma, beta, st);
  EXPECT_NEAR(y.value()[0], (1.0 - 0.2) / std::sqrt(1.1 + 1e-5), 1e-12);
}

TEST(BatchNorm, ZeroChannelsRejected) {
  Context<double> ctx;
  auto x = leaf(DenseTensor<double>(Shape{2, 0, 2, 2}));
  auto p = leaf(DenseTensor<double>(Shape{0}));
  num::BatchNormState<double> st(0);
  EXPECT_THROW(num::batchnorm(ctx, x, p, p, st), DimensionError);
}

TEST(MaxPool, WindowMaximum) {
  Context<double> ctx;
  auto x = leaf(DenseTensor<double>(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4}));
  const auto y = num::maxpool2d(ctx, x);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_DOUBLE_EQ(y.value()[0], 4.0);
}

TEST(MaxPool, TieRoutesGradientToFirstElement) {
  Tape<double> tape;
  auto ctx = ts::recording(tape);
  auto x = leaf(DenseTensor<double>(Shape{1, 1, 2, 2}, 7.0), true);
  auto loss = num::sum(ctx, num::maxpool2d(ctx, x));
  tape.backward(loss);
  EXPECT_EQ(x.grad().storage(), (num::AlignedVector<double>{1, 0, 0, 0}));
}

TEST(MaxPool, BinaryStaysBinaryAndOddDimsRejected) {
  Rng rng(5);
  Context<double> ctx;
  auto s = ts::random_spikes(1, 3, 8, 8, 0.3, rng);
  auto x = leaf(s.to_dense<double>());
  EXPECT_TRUE(num::maxpool2d(ctx, x).value().is_binary());
  auto odd = leaf(DenseTensor<double>(Shape{1, 1, 3, 4}));
  EXPECT_THROW(num::maxpool2d(ctx, odd), DimensionError);
}

TEST(Matmul, IdentityAndMismatch) {
  Context<double> ctx;
  auto eye = leaf(DenseTensor<double>(Shape{2, 2}, std::vector<double>{1, 0, 0, 1}));
  auto a = leaf(DenseTensor<double>(Shape{2, 2}, std::vector<double>{1.5, -2, 3, 4}));
  EXPECT_EQ(num::matmul(ctx, eye, a).value().storage(), a.value().storage());
  auto b = leaf(DenseTensor<double>(Shape{3, 2}));
  EXPECT_THROW(num::matmul(ctx, a, b), DimensionError);
}

TEST(Elementwise, SigmoidAtZeroAndShapeChecks) {
  Context<double> ctx;
  auto z = leaf(DenseTensor<double>(Shape{1}, 0.0));
  EXPECT_DOUBLE_EQ(num::sigmoid(ctx, z).value()[0], 0.5);
  auto a = leaf(DenseTensor<double>(Shape{2}));
  auto b = leaf(DenseTensor<double>(Shape{3}));
  EXPECT_THROW(num::add(ctx, a, b), DimensionError);
  EXPECT_THROW(num::mul(ctx, a, b), DimensionError);
}

TEST(Upsample, TwoByTwoToFourByFour) {
  Context<double> ctx;
  auto x = leaf(DenseTensor<double>(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4}));
  const auto y = num::upsample_bilinear(ctx, x, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  // Half-pixel sampling: output i maps to (i + 0.5)/2 - 0.5, clamped to the
  // edge, so each corner reproduces its source value.
  const auto& v = y.value();
  EXPECT_DOUBLE_EQ(v[0], 1.0);
  EXPECT_DOUBLE_EQ(v[3], 2.0);
  EXPECT_DOUBLE_EQ(v[12], 3.0);
  EXPECT_DOUBLE_EQ(v[15], 4.0);
  // Output (0,1) samples source x = 0.25: 0.75*1 + 0.25*2.
  EXPECT_DOUBLE_EQ(v[1], 1.25);
  // Output (1,1) samples (0.25, 0.25).
  EXPECT_DOUBLE_EQ(v[5], 0.75 * (0.75 * 1 + 0.25 * 2) + 0.25 * (0.75 * 3 + 0.25 * 4));
}

TEST(Backward, SumGivesOnes) {
  Tape<double> tape;
  auto ctx = ts::recording(tape);
  auto x = leaf(DenseTensor<double>(Shape{3}, std::vector<double>{1, -2, 5}), true);
  auto loss = num::sum(ctx, x);
  tape.backward(loss);
  EXPECT_EQ(x.grad().storage(), (num::AlignedVector<double>{1, 1, 1}));
}

TEST(Backward, SumOfSquares) {
  Tape<double> tape;
  auto ctx = ts::recording(tape);
  auto x = leaf(DenseTensor<double>(Shape{2}, std::vector<double>{1, 2}), true);
  auto loss = num::sum(ctx, num::mul(ctx, x, x));
  tape.backward(loss);
  EXPECT_EQ(x.grad().storage(), (num::AlignedVector<double>{2, 4}));
}

TEST(Backward, SecondCallIsStale) {
  Tape<double> tape;
  auto ctx = ts::recording(tape);
  auto x = leaf(DenseTensor<double>(Shape{2}, 1.0), true);
  auto loss = num::sum(ctx, x);
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), StaleTapeError);
}

TEST(Backward, NonFiniteOutputIsNumericError) {
  Context<double> ctx;
  auto x = leaf(DenseTensor<double>(Shape{1}, std::numeric_limits<double>::max()));
  EXPECT_THROW(num::scale(ctx, x, 10.0), NumericError);
}

TEST(Backward, CompositeConvBnSigmoidMatchesFiniteDifferences) {
  Rng rng(11);
  auto x = leaf(ts::random_tensor({2, 2, 5, 5}, rng));
  auto w = leaf(ts::random_tensor({3, 2, 3, 3}, rng));
  auto b = leaf(ts::random_tensor({3}, rng));
  auto gamma = leaf(ts::random_tensor({3}, rng, 0.5, 1.5));
  auto beta = leaf(ts::random_tensor({3}, rng));
  num::BatchNormState<double> st(3);
  auto loss = [&](Context<double>& ctx) {
    auto y = num::batchnorm(ctx, num::conv2d(ctx, x, w, b, 1, 1), gamma, beta, st);
    return num::sum(ctx, num::sigmoid(ctx, y));
  };
  const auto r = ts::gradcheck(loss, {x, w, gamma, beta});
  EXPECT_TRUE(r.ok(1.0, 1e-4)) << "fraction " << r.fraction() << " worst " << r.worst;
}

struct OpCase {
  const char* name;
  std::function<ts::GradCheck(Rng&)> run;
};

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  Rng rng(29);
  const auto r = GetParam().run(rng);
  EXPECT_TRUE(r.ok(1.0, 1e-4)) << GetParam().name << ": fraction " << r.fraction() << " worst " << r.worst;
}

namespace {

ts::GradCheck unary(Rng& rng, Shape shape, std::function<Var<double>(Context<double>&, const Var<double>&)> f,
                         bool training = true) {
  auto x = leaf(ts::random_tensor(shape, rng));
  const auto probe_w = ts::random_tensor(f(*std::make_unique<Context<double>>(), x).shape(), rng);
  return ts::gradcheck([&](Context<double>& c) { return ts::probe(c, f(c, x), probe_w); }, {x}, training);
}

ts::GradCheck binary(Rng& rng, Shape sa, Shape sb,
                          std::function<Var<double>(Context<double>&, const Var<double>&, const Var<double>&)> f) {
  auto a = leaf(ts::random_tensor(sa, rng));
  auto b = leaf(ts::random_tensor(sb, rng));
  Context<double> plain;
  const auto probe_w = ts::random_tensor(f(plain, a, b).shape(), rng);
  return ts::gradcheck([&](Context<double>& c) { return ts::probe(c, f(c, a, b), probe_w); }, {a, b});
}

}  // namespace

INSTANTIATE_TEST_SUITE_P(
    AllOps, OpGradient,
    ::testing::Values(
        OpCase{"conv2d",
               [](Rng& rng) {
                 auto x = leaf(ts::random_tensor({2, 3, 6, 6}, rng));
                 auto w = leaf(ts::random_tensor({2, 3, 3, 3}, rng));
                 auto b = leaf(ts::random_tensor({2}, rng));
                 const auto pw = ts::random_tensor({2, 2, 3, 3}, rng);
                 return ts::gradcheck(
                     [&](Context<double>& c) { return ts::probe(c, num::conv2d(c, x, w, b, 2, 1), pw); },
                     {x, w, b});
               }},
        OpCase{"conv2d_1x1",
               [](Rng& rng) {
                 auto x = leaf(ts::random_tensor({3, 4, 3, 3}, rng));
                 auto w = leaf(ts::random_tensor({5, 4, 1, 1}, rng));
                 auto b = leaf(ts::random_tensor({5}, rng));
                 const auto pw = ts::random_tensor({3, 5, 3, 3}, rng);
                 return ts::gradcheck(
                     [&](Context<double>& c) { return ts::probe(c, num::conv2d(c, x, w, b, 1, 0), pw); },
                     {x, w, b});
               }},
        OpCase{"batchnorm",
               [](Rng& rng) {
                 auto x = leaf(ts::random_tensor({3, 2, 3, 3}, rng));
                 auto g = leaf(ts::random_tensor({2}, rng, 0.5, 1.5));
                 auto b = leaf(ts::random_tensor({2}, rng));
                 num::BatchNormState<double> st(2);
                 const auto pw = ts::random_tensor({3, 2, 3, 3}, rng);
                 return ts::gradcheck(
                     [&](Context<double>& c) { return ts::probe(c, num::batchnorm(c, x, g, b, st), pw); },
                     {x, g, b});
               }},
        OpCase{"batchnorm_eval",
               [](Rng& rng) {
                 auto x = leaf(ts::random_tensor({3, 2, 3, 3}, rng));
                 auto g = leaf(ts::random_tensor({2}, rng, 0.5, 1.5));
                 auto b = leaf(ts::random_tensor({2}, rng));
                 num::BatchNormState<double> st(2);
                 st.running_mean[0] = 0.3;
                 st.running_var[1] = 2.0;
                 const auto pw = ts::random_tensor({3, 2, 3, 3}, rng);
                 return ts::gradcheck(
                     [&](Context<double>& c) { return ts::probe(c, num::batchnorm(c, x, g, b, st), pw); },
                     {x, g, b}, false);
               }},
        OpCase{"maxpool2d",
               [](Rng& rng) {
                 return unary(rng, {2, 2, 4, 4}, [](Context<double>& c, const Var<double>& x) {
                   return num::maxpool2d(c, x);
                 });
               }},
        OpCase{"matmul",
               [](Rng& rng) {
                 return binary(rng, {3, 4}, {4, 2}, [](Context<double>& c, const Var<double>& a, const Var<double>& b) {
                   return num::matmul(c, a, b);
                 });
               }},
        OpCase{"add",
               [](Rng& rng) {
                 return binary(rng, {2, 3}, {2, 3}, [](Context<double>& c, const Var<double>& a, const Var<double>& b) {
                   return num::add(c, a, b);
                 });
               }},
        OpCase{"sub",
               [](Rng& rng) {
                 return binary(rng, {2, 3}, {2, 3}, [](Context<double>& c, const Var<double>& a, const Var<double>& b) {
                   return num::sub(c, a, b);
                 });
               }},
        OpCase{"mul",
               [](Rng& rng) {
                 return binary(rng, {2, 3}, {2, 3}, [](Context<double>& c, const Var<double>& a, const Var<double>& b) {
                   return num::mul(c, a, b);
                 });
               }},
        OpCase{"scale",
               [](Rng& rng) {
                 return unary(rng, {5}, [](Context<double>& c, const Var<double>& x) { return num::scale(c, x, -1.7); });
               }},
        OpCase{"sigmoid",
               [](Rng& rng) {
                 return unary(rng, {2, 4}, [](Context<double>& c, const Var<double>& x) { return num::sigmoid(c, x); });
               }},
        OpCase{"upsample_bilinear",
               [](Rng& rng) {
                 return unary(rng, {1, 2, 3, 2}, [](Context<double>& c, const Var<double>& x) {
                   return num::upsample_bilinear(c, x, 4);
                 });
               }},
        OpCase{"mean",
               [](Rng& rng) {
                 auto x = leaf(ts::random_tensor({2, 5}, rng));
                 return ts::gradcheck([&](Context<double>& c) { return num::mean(c, x); }, {x});
               }},
        OpCase{"reshape", [](Rng& rng) {
                 return unary(rng, {2, 6}, [](Context<double>& c, const Var<double>& x) {
                   return num::reshape(c, x, Shape{3, 4});
                 });
               }}),
    [](const ::testing::TestParamInfo<OpCase>& info) { return std::string(info.param.name); });

TEST(Determinism, ReplayIsBitIdentical) {
  auto run = [] {
    Rng rng(77);
    auto x = leaf(ts::random_tensor({2, 2, 6, 6}, rng), true);
    auto w = leaf(ts::random_tensor({3, 2, 3, 3}, rng), true);
    Tape<double> tape;
    auto ctx = ts::recording(tape);
    ctx.training = true;
    num::BatchNormState<double> st(3);
    auto g = leaf(DenseTensor<double>(Shape{3}, 1.0), true);
    auto b = leaf(DenseTensor<double>(Shape{3}), true);
    auto loss = num::sum(ctx, num::sigmoid(ctx, num::batchnorm(ctx, num::conv2d(ctx, x, w, Var<double>(), 1, 1), g,
                                                               b, st)));
    tape.backward(loss);
    return std::make_pair(loss.value().storage(), w.grad().storage());
  };
  EXPECT_EQ(run(), run());
}
