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
#include <vector>

#include "depas/annealing.hpp"
#include "depas/errors.hpp"
#include "oracles.hpp"

namespace depas {
namespace {

using oracle::sigmoid;
using oracle::softmax;

TEST(AnnealingSigmoid, ClosedFormPoints) {
  EXPECT_DOUBLE_EQ(annealing_sigmoid(0.0, 7.0), 0.5);
  EXPECT_NEAR(annealing_sigmoid(std::log(3.0), 1.0), 0.75, 1e-15);
  const double expected = static_cast<double>(sigmoid(1.0L, 10.0L));
  EXPECT_NEAR(expected, 0.9999546, 1e-6);
  EXPECT_NEAR(annealing_sigmoid(1.0, 10.0), expected, 1e-15);
}

TEST(AnnealingSigmoid, MatchesOracleAndStaysInOpenInterval) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = x(rng);
    for (double d : {1.0, 5.0, 10.0}) {
      const double y = annealing_sigmoid(v, d);
      EXPECT_NEAR(y, static_cast<double>(sigmoid(v, d)), 1e-15);
      EXPECT_NEAR(y + annealing_sigmoid(-v, d), 1.0, 1e-12);
    }
  }
  EXPECT_GT(annealing_sigmoid(-70.0, 10.0), 0.0);
  EXPECT_LT(annealing_sigmoid(3.0, 1.0), 1.0);
}

TEST(AnnealingSigmoid, Errors) {
  EXPECT_THROW((void)annealing_sigmoid(1.0, 0.0), InvalidArgument);
  EXPECT_THROW((void)annealing_sigmoid(1.0, -2.0), InvalidArgument);
  EXPECT_THROW((void)annealing_sigmoid(std::nan(""), 1.0), InvalidInput);
  const std::vector<double> bad{0.0, INFINITY};
  EXPECT_THROW((void)annealing_sigmoid(bad, 1.0), InvalidInput);
}

TEST(AnnealingSigmoid, SharpensWithSlope) {
  std::vector<double> grid;
  for (int i = -20; i <= 20; ++i) grid.push_back(0.05 * i);
  double previous = 1.0;
  for (int d = 1; d <= 10; ++d) {
    double worst = 0.0;
    for (double y : annealing_sigmoid(grid, d)) worst = std::max(worst, std::abs(y - std::round(y)));
    EXPECT_LE(worst, previous);
    previous = worst;
  }
}

TEST(AnnealingSigmoid, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> x(-2.0, 2.0);
  constexpr double h = 1e-6;
  for (double d : {1.0, 5.0, 10.0}) {
    for (int i = 0; i < 100; ++i) {
      const double v = x(rng) / d;
      const std::vector<double> xs{v};
      const std::vector<double> dy{1.0};
      const double analytic = annealing_sigmoid_backward(annealing_sigmoid(xs, d), dy, d)[0];
      const double numeric = (annealing_sigmoid(v + h, d) - annealing_sigmoid(v - h, d)) / (2 * h);
      EXPECT_LT(std::abs(analytic - numeric) / std::abs(numeric), 1e-4) << "delta " << d << " x " << v;
    }
  }
}

TEST(AnnealingSoftmax, ClosedFormPoints) {
  auto y = annealing_softmax(std::vector<double>{0.0, 0.0}, 2, 1, 1.0);
  EXPECT_DOUBLE_EQ(y[0], 0.5);
  EXPECT_DOUBLE_EQ(y[1], 0.5);
  y = annealing_softmax(std::vector<double>{std::log(2.0), 0.0}, 2, 1, 1.0);
  EXPECT_NEAR(y[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0 / 3.0, 1e-15);
  const auto oracle = softmax({2.0L, 1.0L}, 0.05L);
  EXPECT_NEAR(static_cast<double>(oracle[0]), 0.99999998, 1e-7);
  EXPECT_NEAR(static_cast<double>(oracle[1]), 2e-9, 1e-7);
  y = annealing_softmax(std::vector<double>{2.0, 1.0}, 2, 1, 0.05);
  EXPECT_NEAR(y[0], static_cast<double>(oracle[0]), 1e-15);
  EXPECT_NEAR(y[1], static_cast<double>(oracle[1]), 1e-18);
}

TEST(AnnealingSoftmax, ChannelMajorLayoutAndStability) {
  // Two samples, three channels, two pixels; large logits must not overflow.
  const std::vector<double> x{1000.0, 0.0, 999.0, 1.0, 998.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0};
  const auto y = annealing_softmax(x, 3, 2, 0.1);
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t p = 0; p < 2; ++p) {
      double s = 0.0;
      std::vector<long double> logits;
      for (std::size_t c = 0; c < 3; ++c) {
        s += y[n * 6 + c * 2 + p];
        logits.push_back(x[n * 6 + c * 2 + p] - x[n * 6 + p]);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
      const auto o = softmax(logits, 0.1L);
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(y[n * 6 + c * 2 + p], static_cast<double>(o[c]), 1e-14);
    }
  }
}

TEST(AnnealingSoftmax, TemperaturePreservesArgmaxAndSharpens) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = g(rng);
    const auto winner = std::max_element(x.begin(), x.end()) - x.begin();
    double previous = 0.0;
    for (double t : {2.0, 1.0, 0.64, 0.3, 0.134, 0.05}) {
      const auto y = annealing_softmax(x, 5, 1, t);
      const auto top = std::max_element(y.begin(), y.end());
      EXPECT_EQ(top - y.begin(), winner);
      EXPECT_GE(*top, previous);
      previous = *top;
    }
  }
}

TEST(AnnealingSoftmax, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  constexpr std::size_t kC = 4;
  constexpr double h = 1e-6;
  for (double t : {1.0, 0.64, 0.134}) {
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x(kC), w(kC);
      for (auto& v : x) v = 0.3 * g(rng);
      for (auto& v : w) v = g(rng);
      const auto loss = [&](const std::vector<double>& in) {
        const auto y = annealing_softmax(in, kC, 1, t);
        double s = 0.0;
        for (std::size_t c = 0; c < kC; ++c) s += w[c] * y[c];
        return s;
      };
      const auto dx = annealing_softmax_backward(annealing_softmax(x, kC, 1, t), w, kC, 1, t);
      const std::size_t c = static_cast<std::size_t>(i) % kC;
      auto up = x, down = x;
      up[c] += h;
      down[c] -= h;
      const double numeric = (loss(up) - loss(down)) / (2 * h);
      const double err = std::abs(dx[c] - numeric) / std::max(1e-8, std::abs(numeric) + std::abs(dx[c]));
      EXPECT_LT(err, 1e-4) << "T " << t;
    }
  }
}

TEST(AnnealingSoftmax, Errors) {
  const std::vector<double> x{0.0, 1.0};
  EXPECT_THROW((void)annealing_softmax(x, 2, 1, 0.0), InvalidArgument);
  EXPECT_THROW((void)annealing_softmax(x, 2, 1, -1.0), InvalidArgument);
  EXPECT_THROW((void)annealing_softmax(std::vector<double>{0.0, NAN}, 2, 1, 1.0), InvalidInput);
}

TEST(Schedule, ReferencePoints) {
  EXPECT_EQ(slope_at(0), 1.0);
  EXPECT_EQ(slope_at(25), 3.0);
  EXPECT_EQ(slope_at(99), 10.0);
  EXPECT_EQ(temperature_at(0), 1.0);
  EXPECT_NEAR(temperature_at(25), 0.64, 1e-15);
  EXPECT_NEAR(temperature_at(99), 0.134218, 1e-6);
  EXPECT_NEAR(temperature_at(99), std::pow(1.25, -9), 1e-15);
}

TEST(Schedule, MonotoneAndStepwise) {
  const AnnealConfig cfg;
  for (int e = 0; e < 999; ++e) {
    EXPECT_LE(slope_at(e, cfg), slope_at(e + 1, cfg));
    EXPECT_GE(temperature_at(e, cfg), temperature_at(e + 1, cfg));
    EXPECT_DOUBLE_EQ(slope_at(e + cfg.interval_epochs, cfg), slope_at(e, cfg) + cfg.delta_step);
    EXPECT_NEAR(temperature_at(e + cfg.interval_epochs, cfg), temperature_at(e, cfg) / cfg.temp_divisor, 1e-15);
  }
}

TEST(Schedule, StateMatchesFunctions) {
  AnnealConfig cfg;
  cfg.interval_epochs = 2;
  const auto s = AnnealState::at(7, cfg);
  EXPECT_EQ(s.delta, 4.0);
  EXPECT_NEAR(s.temperature, std::pow(1.25, -3), 1e-15);
  cfg.interval_epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Discretize, BinaryThreshold) {
  SoftMask m(1, 1, 3);
  m.values = {0.7, 0.5, 0.2};
  const LabelMask l = discretize(m, MaskMode::kBinary);
  EXPECT_EQ(l.labels, (std::vector<std::uint8_t>{1, 0, 0}));
}

TEST(Discretize, MultilabelArgmaxAndSumCheck) {
  SoftMask m(3, 1, 2);
  m.values = {0.2, 0.4, 0.5, 0.4, 0.3, 0.2};  // channel-major
  const LabelMask l = discretize(m, MaskMode::kMultilabel);
  EXPECT_EQ(l.labels, (std::vector<std::uint8_t>{1, 0}));  // second pixel ties to channel 0
  m.values[0] = 0.3;
  EXPECT_THROW((void)discretize(m, MaskMode::kMultilabel), InvalidInput);
}

}  // namespace
}  // namespace depas
