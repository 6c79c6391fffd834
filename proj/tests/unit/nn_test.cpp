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
#include <numbers>

#include "grad_check.hpp"
#include "irdist/error.hpp"
#include "irdist/nn.hpp"
#include "test_util.hpp"

namespace irdist {
namespace {

using testing::random_tensor;

TEST(ParamsTest, ShapesFollowArch) {
  for (const auto& a : small_grid()) {
    Rng rng(1);
    const auto p = init_params<float>(a, rng);
    EXPECT_EQ(p.size(), param_count(a)) << a.name();
    EXPECT_NO_THROW(check_params(a, p));
    std::size_t k = 0;
    for (const auto& l : shape_plan(a)) {
      if (!l.has_params()) continue;
      EXPECT_EQ(p.layers[k].weights.size(), l.weight_count());
      EXPECT_EQ(p.layers[k].bias.size(), l.bias_count());
      ++k;
    }
  }
  const auto other = ModelParams<float>::zeros(ArchConfig::parse("1F-C16-P-FC"));
  EXPECT_THROW(check_params(ArchConfig::parse("1F-C8-P-FC"), other), InvalidArgumentError);
}

TEST(ParamsTest, InitIsBoundedAndSeeded) {
  const auto a = ArchConfig::parse("1F-C8-P-FC-FC");
  Rng r1(3), r2(3);
  const auto p = init_params<float>(a, r1);
  EXPECT_EQ(p, init_params<float>(a, r2));
  const double conv_limit = std::sqrt(6.0 / 9.0);  // He-uniform, fan_in 9
  for (float w : p.layers[0].weights.data()) EXPECT_LE(std::abs(w), conv_limit);
  for (const auto& l : p.layers)
    for (float b : l.bias.data()) EXPECT_EQ(b, 0.0f);
}

TEST(ForwardTest, ZeroParamsGiveHalf) {
  const auto a = ArchConfig::parse("8F-C16-C8-FC-FC");
  const auto p = ModelParams<double>::zeros(a);
  Rng rng(2);
  EXPECT_DOUBLE_EQ(forward(a, p, random_tensor<double>(a.input_shape(), rng)), 0.5);
}

TEST(ForwardTest, OutputInOpenUnitInterval) {
  const auto a = ArchConfig::parse("1F-C16-P-FC-FC");
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    auto init = rng.split("t" + std::to_string(t));
    const auto p = init_params<double>(a, init);
    const double y = forward(a, p, random_tensor<double>(a.input_shape(), rng, -3, 3));
    EXPECT_GT(y, 0.0);
    EXPECT_LT(y, 1.0);
  }
}

TEST(ForwardTest, ComposesTensorKernels) {
  const auto a = ArchConfig::parse("1F-C8-P-FC");
  Rng rng(8);
  auto p = init_params<double>(a, rng);
  for (auto& l : p.layers)
    for (double& b : l.bias.data()) b = rng.normal();
  const auto x = random_tensor<double>(a.input_shape(), rng);
  const auto h = maxpool2x2(relu(conv2d_valid(x, p.layers[0].weights, p.layers[0].bias)));
  const double want = sigmoid(dense(h, p.layers[1].weights, p.layers[1].bias)[0]);
  EXPECT_NEAR(forward(a, p, x), want, 1e-15);
}

TEST(LossTest, Examples) {
  EXPECT_NEAR(weighted_bce(0.5, true, ClassWeights{1, 1}), std::numbers::ln2, 1e-12);
  EXPECT_LT(weighted_bce(1.0 - 1e-12, true, ClassWeights{1, 1}), 1e-6);
  EXPECT_TRUE(std::isfinite(weighted_bce(0.0, true, ClassWeights{1, 1})));
  // Constant p=0.5 under inverse-prior weights averages to 2 ln 2.
  const double pos = 0.343, wp = 1 / 0.343, wn = 1 / 0.657;
  const double mean = pos * weighted_bce(0.5, true, {wp, wn}) + (1 - pos) * weighted_bce(0.5, false, {wp, wn});
  EXPECT_NEAR(mean, 2 * std::numbers::ln2, 1e-12);
}

TEST(GradientTest, MatchesFiniteDifferences) {
  for (const char* name : {"1F-C8-P-FC", "1F-C8-FC-FC", "1F-C8-C16-P-FC-FC", "8F-C8-P-FC"}) {
    const auto r = testing::grad_check(ArchConfig::parse(name), 11);
    EXPECT_LE(r.max_rel_error, 1e-4) << name;
    EXPECT_GT(r.checked, 50u) << name;
    EXPECT_LT(r.skipped_kinks * 20, r.checked + r.skipped_kinks) << name;
  }
}

TEST(GradientTest, MeanIsInvariantToDuplication) {
  const auto a = ArchConfig::parse("1F-C8-P-FC-FC");
  Rng rng(4);
  const auto p = init_params<double>(a, rng);
  const auto x0 = random_tensor<double>(a.input_shape(), rng);
  const auto x1 = random_tensor<double>(a.input_shape(), rng);
  const std::vector<BatchItem<double>> once{{&x0, true}, {&x1, false}};
  const std::vector<BatchItem<double>> twice{{&x0, true}, {&x1, false}, {&x0, true}, {&x1, false}};
  const auto g1 = backward<double>(a, p, once, {2, 1});
  const auto g2 = backward<double>(a, p, twice, {2, 1});
  EXPECT_NEAR(g1.loss, g2.loss, 1e-14);
  for (std::size_t k = 0; k < p.layers.size(); ++k)
    for (std::size_t i = 0; i < g1.grad.layers[k].weights.size(); ++i)
      EXPECT_NEAR(g1.grad.layers[k].weights[i], g2.grad.layers[k].weights[i], 1e-14);
}

TEST(GradientTest, VanishesAsFitSaturates) {
  const auto a = ArchConfig::parse("1F-C8-P-FC");
  auto p = ModelParams<double>::zeros(a);
  Rng rng(6);
  const auto x = random_tensor<double>(a.input_shape(), rng);
  const std::vector<BatchItem<double>> batch{{&x, true}};
  double prev = 1e9;
  for (double b : {2.0, 6.0, 12.0}) {
    p.layers[1].bias[0] = b;
    const auto g = backward<double>(a, p, batch, {1, 1});
    EXPECT_LT(std::abs(g.grad.layers[1].bias[0]), prev);
    prev = std::abs(g.grad.layers[1].bias[0]);
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(AdamTest, FirstStepIsSignTimesLr) {
  const auto a = ArchConfig::parse("1F-C8-P-FC");
  auto p = ModelParams<double>::zeros(a);
  auto g = ModelParams<double>::zeros(a);
  g.layers[0].weights[0] = 0.3;
  g.layers[1].weights[5] = -2.0;
  auto st = AdamState<double>::like(p);
  adam_step(p, g, st, 1e-3);
  EXPECT_NEAR(p.layers[0].weights[0], -1e-3, 1e-9);
  EXPECT_NEAR(p.layers[1].weights[5], 1e-3, 1e-9);
  EXPECT_EQ(p.layers[0].weights[1], 0.0);  // zero gradient leaves it unchanged
}

TEST(AdamTest, Deterministic) {
  const auto a = ArchConfig::parse("1F-C8-P-FC-FC");
  const auto run = [&] {
    Rng rng(21);
    auto p = init_params<float>(a, rng);
    auto st = AdamState<float>::like(p);
    const auto x = random_tensor<float>(a.input_shape(), rng);
    const std::vector<BatchItem<float>> batch{{&x, true}};
    for (int i = 0; i < 10; ++i) adam_step(p, backward<float>(a, p, batch, {1, 1}).grad, st, 1e-3);
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(ScheduleTest, PlateauDecaysGeometrically) {
  PlateauScheduler s(1e-3, 0.3, 5, 1e-4, 1e-6);
  std::vector<double> lrs;
  s.step(1.0);
  for (int i = 0; i < 40; ++i) {
    lrs.push_back(s.lr());
    s.step(1.0);
  }
  EXPECT_DOUBLE_EQ(lrs[0], 1e-3);
  EXPECT_DOUBLE_EQ(lrs[5], 3e-4);
  EXPECT_NEAR(lrs[10], 9e-5, 1e-18);
  EXPECT_NEAR(lrs[15], 2.7e-5, 1e-18);
  EXPECT_DOUBLE_EQ(lrs.back(), 1e-6);  // floored at min_lr
}

TEST(ScheduleTest, ImprovementNeedsMinDelta) {
  EarlyStopping es(3, 0.1);
  EXPECT_TRUE(es.update(1.0));
  EXPECT_FALSE(es.update(0.95));  // not better by more than min_delta
  EXPECT_TRUE(es.update(0.85));
  EXPECT_FALSE(es.update(0.9));
  EXPECT_FALSE(es.update(0.9));
  EXPECT_FALSE(es.should_stop());
  EXPECT_FALSE(es.update(0.9));
  EXPECT_TRUE(es.should_stop());
  EXPECT_DOUBLE_EQ(es.best(), 0.85);
}

// Validation labels are the opposite of training labels for the same
// inputs, so every epoch of progress on train worsens validation.
DatasetSplit adversarial_split() {
  DatasetSplit s;
  Rng rng(13);
  for (int i = 0; i < 64; ++i) {
    Sample smp;
    smp.input = Tensor({8, 8, 1});
    const bool hot = i % 2 == 0;
    for (float& v : smp.input.data()) v = static_cast<float>((hot ? 1.0 : -1.0) + rng.normal(0, 0.1));
    smp.label = hot;
    s.train.push_back(smp);
    smp.label = !hot;
    s.val.push_back(smp);
  }
  s.weights = class_weights(s.train);
  return s;
}

TEST(TrainTest, StopsTenEpochsAfterLastImprovement) {
  const auto split = adversarial_split();
  TrainConfig c;
  const auto r = train(ArchConfig::parse("1F-C8-P-FC"), split, c);
  EXPECT_EQ(r.report.best_epoch, 1);
  EXPECT_EQ(r.report.epochs_run, 11);
  EXPECT_TRUE(r.report.stopped_early);
  ASSERT_EQ(r.report.lr_history.size(), 11u);
  for (int e = 0; e < 6; ++e) EXPECT_DOUBLE_EQ(r.report.lr_history[e], 1e-3);
  for (int e = 6; e < 11; ++e) EXPECT_NEAR(r.report.lr_history[e], 3e-4, 1e-18);
}

TEST(TrainTest, RestoresBestParameters) {
  const auto split = adversarial_split();
  const auto a = ArchConfig::parse("1F-C8-P-FC");
  TrainConfig c;
  const auto r = train(a, split, c);
  TrainConfig one = c;
  one.max_epochs = 1;
  EXPECT_EQ(train(a, split, one).params, r.params);
}

TEST(TrainTest, SeparableDataReachesHighAccuracy) {
  DatasetSplit s;
  Rng rng(17);
  for (int i = 0; i < 600; ++i) {
    Sample smp;
    smp.input = Tensor({8, 8, 1});
    smp.label = rng.bernoulli(0.4);
    for (float& v : smp.input.data()) v = static_cast<float>(rng.normal(0, 0.5));
    const auto r = rng.below(6), c = rng.below(6);
    if (smp.label) {  // a hot 3x3 patch
      for (std::size_t dr = 0; dr < 3; ++dr)
        for (std::size_t dc = 0; dc < 3; ++dc) smp.input.at(r + dr, c + dc, 0) += 3.0f;
    }
    (i < 400 ? s.train : s.val).push_back(std::move(smp));
  }
  s.weights = class_weights(s.train);
  TrainConfig c;
  c.max_epochs = 50;
  const auto a = ArchConfig::parse("1F-C8-P-FC");
  const auto r = train(a, s, c);
  EXPECT_LE(r.report.epochs_run, 50);
  ASSERT_TRUE(r.report.val_metrics.balanced_accuracy.has_value());
  EXPECT_GE(*r.report.val_metrics.balanced_accuracy, 0.95);
}

TEST(TrainTest, SameSeedSameModel) {
  SynthSpec spec;
  spec.sessions = {{400, 3}, {200, 3}};
  const auto frames = synth_generate(spec, 23);
  SplitSpec sp;
  sp.test_sessions = {2};
  const auto split = build_split(frames, sp, SampleVariant::single());
  TrainConfig c;
  c.max_epochs = 5;
  const auto a = ArchConfig::parse("1F-C8-P-FC-FC");
  EXPECT_EQ(train(a, split, c).params, train(a, split, c).params);
  TrainConfig c2 = c;
  c2.seed = 1;
  EXPECT_NE(train(a, split, c).params, train(a, split, c2).params);
}

TEST(TrainTest, ConfigValidation) {
  TrainConfig c;
  c.max_epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.plateau_factor = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace irdist
