/* Copyright 2026 The irdist Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "irdist/error.hpp"
#include "irdist/tensor.hpp"
#include "test_util.hpp"

namespace irdist {
namespace {

using testing::random_tensor;

// Direct transcription of the valid cross-correlation sum.
TensorD naive_conv(const TensorD& x, const TensorD& k, const TensorD& b) {
  const std::size_t h = x.dim(0), w = x.dim(1), cin = x.dim(2), cout = k.dim(3);
  TensorD out({h - 2, w - 2, cout});
  for (std::size_t i = 0; i + 2 < h; ++i)
    for (std::size_t j = 0; j + 2 < w; ++j)
      for (std::size_t o = 0; o < cout; ++o) {
        double s = b[o];
        for (std::size_t di = 0; di < 3; ++di)
          for (std::size_t dj = 0; dj < 3; ++dj)
            for (std::size_t c = 0; c < cin; ++c)
              s += x.at(i + di, j + dj, c) * k[((di * 3 + dj) * cin + c) * cout + o];
        out.at(i, j, o) = s;
      }
  return out;
}

TEST(TensorTest, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<float>(5)), InvalidArgumentError);
  EXPECT_NO_THROW(Tensor({2, 3}, std::vector<float>(6)));
  EXPECT_EQ(shape_size({2, 3, 4}), 24u);
  EXPECT_EQ(shape_to_string({6, 6, 8}), "(6,6,8)");
}

TEST(TensorTest, ExternalDataRejectsNonFinite) {
  EXPECT_THROW(Tensor::from_external({2}, {1.0f, std::numeric_limits<float>::quiet_NaN()}),
               InvalidArgumentError);
  EXPECT_THROW(Tensor::from_external({1}, {std::numeric_limits<float>::infinity()}),
               InvalidArgumentError);
  EXPECT_NO_THROW(Tensor::from_external({2}, {1.0f, -2.0f}));
}

TEST(ConvTest, OnesSumToNine) {
  const Tensor x({3, 3, 1}, 1.0f), k({3, 3, 1, 1}, 1.0f), b({1}, 0.0f);
  const Tensor y = conv2d_valid(x, k, b);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_FLOAT_EQ(y[0], 9.0f);
}

TEST(ConvTest, MatchesNaiveSum) {
  Rng rng(7);
  for (const auto [cin, cout] : {std::pair<std::size_t, std::size_t>{1, 8}, {8, 32}, {16, 8}, {3, 5}}) {
    const auto x = random_tensor<double>({8, 8, cin}, rng);
    const auto k = random_tensor<double>({3, 3, cin, cout}, rng);
    const auto b = random_tensor<double>({cout}, rng);
    const auto got = conv2d_valid(x, k, b);
    const auto want = naive_conv(x, k, b);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(ConvTest, ShapesAndMacs) {
  const Tensor y = conv2d_valid(Tensor({8, 8, 1}), Tensor({3, 3, 1, 8}), Tensor({8}));
  EXPECT_EQ(y.shape(), (Shape{6, 6, 8}));
  EXPECT_EQ(conv2d_valid_macs(8, 8, 1, 8), 2592u);
  EXPECT_EQ(conv2d_valid_macs(8, 8, 8, 32), 82944u);
}

TEST(ConvTest, RejectsBadShapes) {
  EXPECT_THROW(conv2d_valid(Tensor({2, 2, 1}), Tensor({3, 3, 1, 1}), Tensor({1})), InvalidArgumentError);
  EXPECT_THROW(conv2d_valid(Tensor({8, 8, 2}), Tensor({3, 3, 1, 1}), Tensor({1})), InvalidArgumentError);
  EXPECT_THROW(conv2d_valid(Tensor({8, 8, 1}), Tensor({3, 3, 1, 2}), Tensor({1})), InvalidArgumentError);
  EXPECT_THROW(conv2d_valid(Tensor({8, 8}), Tensor({3, 3, 1, 1}), Tensor({1})), InvalidArgumentError);
}

TEST(PoolTest, MaxOfWindow) {
  const Tensor x({2, 2, 1}, {1, 2, 3, 4});
  const Tensor y = maxpool2x2(x);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_FLOAT_EQ(y[0], 4.0f);
}

TEST(PoolTest, HalvesSpatialDims) {
  EXPECT_EQ(maxpool2x2(Tensor({6, 6, 8})).shape(), (Shape{3, 3, 8}));
  EXPECT_EQ(maxpool2x2(Tensor({4, 4, 16})).shape(), (Shape{2, 2, 16}));
  EXPECT_THROW(maxpool2x2(Tensor({1, 4, 1})), InvalidArgumentError);
}

TEST(PoolTest, ConstantStaysConstant) {
  const Tensor y = maxpool2x2(Tensor({6, 6, 3}, 2.5f));
  for (float v : y.data()) EXPECT_FLOAT_EQ(v, 2.5f);
}

TEST(PoolTest, ArgmaxPointsAtMaximum) {
  Rng rng(3);
  const Tensor x = random_tensor<float>({6, 6, 4}, rng);
  std::vector<std::size_t> arg;
  const Tensor y = maxpool2x2(x, arg);
  ASSERT_EQ(arg.size(), y.size());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(x[arg[i]], y[i]);
}

TEST(DenseTest, IdentityIsNoOp) {
  Tensor w({4, 4}, 0.0f);
  for (std::size_t i = 0; i < 4; ++i) w[i * 4 + i] = 1.0f;
  const Tensor x({4}, {1, -2, 3, 0.5});
  EXPECT_EQ(dense(x, w, Tensor({4})), x);
}

TEST(DenseTest, ReadsInputFlat) {
  Rng rng(11);
  const TensorD x = random_tensor<double>({3, 3, 8}, rng);
  const TensorD w = random_tensor<double>({72, 2}, rng);
  const TensorD b({2}, {0.5, -0.25});
  const TensorD y = dense(x, w, b);
  for (std::size_t o = 0; o < 2; ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < 72; ++i) s += x[i] * w[i * 2 + o];
    EXPECT_NEAR(y[o], s, 1e-12);
  }
  EXPECT_EQ(dense_macs(72, 1), 72u);
  EXPECT_EQ(dense_macs(72, 64) + dense_macs(64, 1), 4672u);
  EXPECT_THROW(dense(x, TensorD({71, 2}), b), InvalidArgumentError);
}

TEST(ActivationTest, ReluAndSigmoid) {
  const Tensor r = relu(Tensor({2}, {-3.0f, 2.0f}));
  EXPECT_EQ(r[0], 0.0f);
  EXPECT_EQ(r[1], 2.0f);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  for (double x : {-40.0, -5.0, -0.3, 0.0, 1.7, 12.0, 700.0}) {
    EXPECT_NEAR(sigmoid(-x), 1.0 - sigmoid(x), 1e-12) << x;
    EXPECT_TRUE(std::isfinite(sigmoid(x)));
  }
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
}

}  // namespace
}  // namespace irdist
