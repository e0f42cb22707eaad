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
#include <random>

#include "depas/annealing.hpp"
#include "depas/errors.hpp"
#include "depas/generator.hpp"

namespace depas {
namespace {

GeneratorConfig small_config(std::size_t labels = 1) {
  GeneratorConfig c;
  c.latent_dim = 6;
  c.num_blocks = 2;
  c.base_channels = 3;
  c.output_height = 8;
  c.output_width = 16;
  c.num_labels = labels;
  return c;
}

double weighted_sum(const Tensor& out, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

// Largest relative error between analytic and central-difference gradients
// over a sample of coordinates of every parameter.
double generator_gradient_error(std::size_t labels, const AnnealState& anneal) {
  const GeneratorConfig cfg = small_config(labels);
  Generator g(cfg);
  g.initialize(11);
  nn::Rng rng(5);
  const auto batch = sample_latent_batch(rng, cfg, 3);
  Tensor w(3, cfg.num_labels, cfg.output_height, cfg.output_width);
  nn::fill_normal(w, rng, 0.0, 1.0);

  g.zero_grad();
  const Tensor out = g.forward(batch, anneal, true);
  g.backward(w);

  constexpr double h = 1e-5;
  double worst = 0.0;
  std::uniform_int_distribution<std::size_t> any;
  for (auto* p : g.parameters()) {
    for (int k = 0; k < 6; ++k) {
      const std::size_t i = any(rng) % p->value.size();
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = weighted_sum(g.forward(batch, anneal, true), w);
      p->value[i] = saved - h;
      const double down = weighted_sum(g.forward(batch, anneal, true), w);
      p->value[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad[i];
      const double err = std::abs(numeric - analytic) / std::max(1e-6, std::abs(numeric) + std::abs(analytic));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

TEST(Generator, OutputShapeAndRangeBinary) {
  const auto cfg = small_config();
  Generator g(cfg);
  g.initialize(1);
  nn::Rng rng(2);
  const Tensor out = g.forward(sample_latent_batch(rng, cfg, 4), AnnealState::at(0, {}), true);
  EXPECT_EQ(out.dims(), (Tensor::Dims{4, 1, 8, 16}));
  for (double v : out.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Generator, MultilabelChannelsSumToOne) {
  const auto cfg = small_config(6);
  Generator g(cfg);
  g.initialize(1);
  const SoftMask m = g.generate(sample_latent(3, cfg), AnnealState::at(99, {}));
  ASSERT_EQ(m.channels, 6u);
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) {
      double s = 0.0;
      for (std::size_t c = 0; c < 6; ++c) s += m.at(c, y, x);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Generator, EndToEndGradientMatchesFiniteDifferences) {
  EXPECT_LT(generator_gradient_error(1, AnnealState::at(0, {})), 1e-3);
  EXPECT_LT(generator_gradient_error(1, AnnealState::at(40, {})), 1e-3);
  EXPECT_LT(generator_gradient_error(4, AnnealState::at(30, {})), 1e-3);
}

TEST(Generator, SameSeedSameOutput) {
  const auto cfg = small_config();
  Generator a(cfg), b(cfg);
  a.initialize(9);
  b.initialize(9);
  const auto z = sample_latent(4, cfg);
  const auto anneal = AnnealState::at(0, {});
  EXPECT_EQ(a.generate(z, anneal).values, b.generate(z, anneal).values);
}

TEST(Generator, SpatialFieldChangesOutput) {
  const auto cfg = small_config();
  Generator g(cfg);
  g.initialize(9);
  auto z = sample_latent(4, cfg);
  const auto anneal = AnnealState::at(0, {});
  const auto before = g.generate(z, anneal).values;
  z.spatial_fields.back().fill(3.0);
  EXPECT_NE(before, g.generate(z, anneal).values);
}

TEST(Generator, LatentShapes) {
  const auto cfg = small_config();
  const auto z = sample_latent(1, cfg);
  EXPECT_EQ(z.channel_vector.size(), cfg.latent_dim);
  ASSERT_EQ(z.spatial_fields.size(), cfg.num_blocks);
  EXPECT_EQ(z.spatial_fields[0].dims(), (Tensor::Dims{1, 1, 4, 8}));
  EXPECT_EQ(z.spatial_fields[1].dims(), (Tensor::Dims{1, 1, 8, 16}));
}

TEST(Generator, DcganInitStatistics) {
  GeneratorConfig cfg;
  Generator g(cfg);
  g.initialize(3);
  for (auto* p : g.parameters()) {
    if (p->name.find("deconv") == std::string::npos || p->value.size() < 5000) continue;
    double mean = 0.0, sq = 0.0;
    for (double v : p->value.values()) {
      mean += v;
      sq += v * v;
    }
    mean /= static_cast<double>(p->value.size());
    const double sd = std::sqrt(sq / static_cast<double>(p->value.size()) - mean * mean);
    EXPECT_NEAR(mean, 0.0, 0.002) << p->name;
    EXPECT_NEAR(sd, 0.02, 0.002) << p->name;
  }
}

TEST(SpatialNoise, BroadcastsAcrossChannels) {
  Tensor x(2, 3, 2, 2, 1.0);
  Tensor field(1, 1, 2, 2);
  for (std::size_t i = 0; i < 4; ++i) field[i] = static_cast<double>(i);
  const Tensor y = inject_spatial_noise(x, field, 0.5);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y.at(n, c, i / 2, i % 2), 1.0 + 0.5 * static_cast<double>(i));
}

TEST(SpatialNoise, ZeroScaleIsIdentity) {
  Tensor x(1, 2, 3, 3, 0.25);
  Tensor field(1, 1, 3, 3, 7.0);
  const Tensor y = inject_spatial_noise(x, field, 0.0);
  ASSERT_EQ(y.size(), 18u);
  for (double v : y.values()) EXPECT_EQ(v, 0.25);
}

TEST(SpatialNoise, RejectsMismatchedField) {
  Tensor x(1, 2, 4, 4);
  Tensor field(1, 1, 4, 3);
  EXPECT_THROW((void)inject_spatial_noise(x, field, 0.1), InvalidInput);
}

TEST(GeneratorConfig, ValidatesGeometry) {
  GeneratorConfig c;
  c.output_width = 100;
  EXPECT_THROW(c.validate(), ConfigError);
  c = GeneratorConfig{};
  c.output_height = 48;
  c.output_width = 96;
  EXPECT_THROW(c.validate(), ConfigError);
  c = GeneratorConfig{};
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.block_channels(0), 128u);
  EXPECT_EQ(c.block_channels(4), 8u);
}

}  // namespace
}  // namespace depas
