// Copyright 2026 The DEPAS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "depas/discriminator.hpp"
#include "depas/errors.hpp"

namespace depas {
namespace {

Tensor random_mask(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed) {
  Tensor t(n, 1, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

Discriminator make_disc(std::size_t h, std::size_t w, std::uint64_t seed = 1) {
  Discriminator d("d", DiscriminatorConfig{}, 1, h, w);
  nn::Rng rng(seed);
  d.initialize(rng);
  return d;
}

TEST(Discriminator, BatchOfEightGivesEightProbabilities) {
  auto d = make_disc(64, 128);
  const auto p = d.forward(random_mask(8, 64, 128, 2), true);
  ASSERT_EQ(p.size(), 8u);
  for (double v : p) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(d.depth(), 4u);  // 64 -> 32 -> 16 -> 8 -> 4
}

TEST(Discriminator, ZeroOutputLayerGivesHalf) {
  auto d = make_disc(32, 64);
  d.output_layer().weight().value.fill(0.0);
  d.output_layer().bias().value.fill(0.0);
  for (double v : d.forward(random_mask(3, 32, 64, 4), false)) EXPECT_EQ(v, 0.5);
}

TEST(Discriminator, EvaluationModeIsRepeatableAndOrderInvariant) {
  auto d = make_disc(16, 32);
  (void)d.forward(random_mask(6, 16, 32, 5), true);  // populate running statistics
  const Tensor x = random_mask(4, 16, 32, 6);
  const auto a = d.forward(x, false);
  EXPECT_EQ(a, d.forward(x, false));
  Tensor reversed(x.dims());
  for (std::size_t i = 0; i < 4; ++i) {
    std::copy(x.sample(3 - i).begin(), x.sample(3 - i).end(), reversed.sample(i).begin());
  }
  const auto b = d.forward(reversed, false);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(a[i], b[3 - i]);
}

TEST(Discriminator, RejectsWrongResolution) {
  auto d = make_disc(16, 32);
  EXPECT_THROW((void)d.forward(random_mask(2, 8, 16, 1), false), InvalidInput);
}

TEST(Discriminator, GradientsMatchFiniteDifferences) {
  auto d = make_disc(16, 32, 9);
  const Tensor x = random_mask(3, 16, 32, 7);
  const std::vector<double> w{0.7, -1.3, 0.4};
  const auto loss = [&](const Tensor& in) {
    const auto p = d.forward(in, true);
    return w[0] * p[0] + w[1] * p[1] + w[2] * p[2];
  };
  d.zero_grad();
  (void)d.forward(x, true);
  const Tensor dx = d.backward(w);
  constexpr double h = 1e-5;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> any;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-7, std::abs(a) + std::abs(b)); };
  for (int k = 0; k < 20; ++k) {
    const std::size_t i = any(rng) % x.size();
    Tensor up = x, down = x;
    up[i] += h;
    down[i] -= h;
    EXPECT_LT(rel((loss(up) - loss(down)) / (2 * h), dx[i]), 1e-4);
  }
  for (auto* p : d.parameters()) {
    for (int k = 0; k < 4; ++k) {
      const std::size_t i = any(rng) % p->value.size();
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double a = loss(x);
      p->value[i] = saved - h;
      const double b = loss(x);
      p->value[i] = saved;
      EXPECT_LT(rel((a - b) / (2 * h), p->grad[i]), 1e-4) << p->name;
    }
  }
}

TEST(DownsampleMask, ConstantCheckerboardAndShape) {
  Tensor c(1, 1, 8, 8, 0.3);
  const Tensor pc = downsample_mask(c, 4);
  for (double v : pc.values()) EXPECT_DOUBLE_EQ(v, 0.3);
  Tensor board(1, 1, 2, 2);
  board.values()[0] = 1.0;
  board.values()[3] = 1.0;
  const Tensor pooled = downsample_mask(board, 2);
  ASSERT_EQ(pooled.size(), 1u);
  EXPECT_DOUBLE_EQ(pooled[0], 0.5);
  EXPECT_EQ(downsample_mask(Tensor(1, 1, 512, 1024), 2).dims(), (Tensor::Dims{1, 1, 256, 512}));
  EXPECT_THROW((void)downsample_mask(Tensor(1, 1, 6, 10), 4), InvalidInput);
}

TEST(DownsampleMask, MeanPreservedAndComposes) {
  const Tensor x = random_mask(2, 16, 32, 11);
  const double mean = std::accumulate(x.values().begin(), x.values().end(), 0.0) / static_cast<double>(x.size());
  const Tensor q = downsample_mask(x, 4);
  const double qmean = std::accumulate(q.values().begin(), q.values().end(), 0.0) / static_cast<double>(q.size());
  EXPECT_NEAR(mean, qmean, 1e-12);
  const Tensor twice = downsample_mask(downsample_mask(x, 2), 2);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(q[i], twice[i], 1e-12);
  for (double v : q.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(DownsampleMask, BackwardIsAdjoint) {
  const Tensor x = random_mask(2, 8, 16, 12);
  const Tensor g = random_mask(2, 4, 8, 13);
  const Tensor px = downsample_mask(x, 2);
  const Tensor bg = downsample_mask_backward(g, 2);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) lhs += px[i] * g[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * bg[i];
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(GanLoss, ReferenceValues) {
  EXPECT_NEAR(gan_loss_at_scale(0.5, 0.5), -2.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(gan_loss_at_scale(0.5, 0.5), -1.3863, 1e-4);
  EXPECT_NEAR(gan_loss_at_scale(0.9, 0.1), 2.0 * std::log(0.9), 1e-15);
  EXPECT_NEAR(gan_loss_at_scale(0.9, 0.1), -0.2107, 1e-4);
  EXPECT_NEAR(gan_loss_at_scale(1.0, 0.0), 0.0, 1e-6);
  EXPECT_LE(gan_loss_at_scale(1.0, 0.0), 0.0);
  EXPECT_TRUE(std::isfinite(gan_loss_at_scale(0.0, 1.0)));
  EXPECT_NEAR(gan_loss_at_scale(0.0, 1.0), 2.0 * std::log(1e-7), 1e-9);
}

TEST(MultiscaleObjective, WeightedSumIdentity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::array<ScaleOutputs, kNumScales> outs;
    for (auto& o : outs) {
      for (int i = 0; i < 5; ++i) {
        o.real.push_back(u(rng));
        o.fake.push_back(u(rng));
      }
    }
    const std::array<double, kNumScales> alphas{u(rng), u(rng), u(rng)};
    const auto obj = combine_scales(outs, alphas);
    double expected = 0.0;
    for (std::size_t r = 0; r < kNumScales; ++r) {
      EXPECT_EQ(obj.per_scale[r], gan_loss_at_scale(outs[r].real, outs[r].fake));
      expected += alphas[r] * gan_loss_at_scale(outs[r].real, outs[r].fake);
    }
    EXPECT_EQ(obj.total, expected);
  }
}

TEST(MultiscaleObjective, DegenerateWeightsAndHalfOutputs) {
  std::array<ScaleOutputs, kNumScales> outs;
  for (auto& o : outs) {
    o.real = {0.5, 0.5};
    o.fake = {0.5, 0.5};
  }
  EXPECT_NEAR(combine_scales(outs, {1.0, 1.0, 1.0}).total, -6.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(combine_scales(outs, {1.0, 1.0, 1.0}).total, -4.1589, 1e-4);
  outs[0].real = {0.8, 0.7};
  const auto obj = combine_scales(outs, {1.0, 0.0, 0.0});
  EXPECT_EQ(obj.total, gan_loss_at_scale(outs[0].real, outs[0].fake));
}

TEST(MultiscaleObjective, BankOnMasks) {
  DiscriminatorBank bank(DiscriminatorConfig{}, 1, 32, 64);
  bank.initialize(3);
  for (auto& d : bank.members) {
    d.output_layer().weight().value.fill(0.0);
    d.output_layer().bias().value.fill(0.0);
  }
  const auto obj = multiscale_objective(random_mask(4, 32, 64, 1), random_mask(4, 32, 64, 2), bank);
  EXPECT_NEAR(obj.total, -6.0 * std::log(2.0), 1e-12);
  EXPECT_EQ(bank.members[1].input_height(), 16u);
  EXPECT_EQ(bank.members[2].input_width(), 16u);
}

}  // namespace
}  // namespace depas
