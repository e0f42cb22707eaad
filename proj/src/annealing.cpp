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

#include "depas/annealing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "depas/errors.hpp"

namespace depas {

namespace {

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite input");
  }
}

}  // namespace

void AnnealConfig::validate() const {
  if (!(delta_step > 0.0)) throw ConfigError("anneal delta_step must be positive");
  if (!(temp_divisor > 1.0)) throw ConfigError("anneal temp_divisor must exceed 1");
  if (interval_epochs <= 0) throw ConfigError("anneal interval_epochs must be positive");
}

double slope_at(int epoch, const AnnealConfig& config) {
  const int steps = std::max(epoch, 0) / config.interval_epochs;
  return 1.0 + config.delta_step * steps;
}

double temperature_at(int epoch, const AnnealConfig& config) {
  const int steps = std::max(epoch, 0) / config.interval_epochs;
  return std::pow(config.temp_divisor, -static_cast<double>(steps));
}

AnnealState AnnealState::at(int epoch, const AnnealConfig& config) {
  config.validate();
  return AnnealState{epoch, slope_at(epoch, config), temperature_at(epoch, config), config};
}

double annealing_sigmoid(double x, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("annealing_sigmoid: delta must be positive");
  if (!std::isfinite(x)) throw InvalidInput("annealing_sigmoid: non-finite input");
  // Branch on sign so exp never overflows.
  const double z = delta * x;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> annealing_sigmoid(std::span<const double> x, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("annealing_sigmoid: delta must be positive");
  require_finite(x, "annealing_sigmoid");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = delta * x[i];
    if (z >= 0.0) {
      y[i] = 1.0 / (1.0 + std::exp(-z));
    } else {
      const double e = std::exp(z);
      y[i] = e / (1.0 + e);
    }
  }
  return y;
}

std::vector<double> annealing_sigmoid_backward(std::span<const double> y, std::span<const double> dy,
                                               double delta) {
  if (y.size() != dy.size()) throw InvalidInput("annealing_sigmoid_backward: size mismatch");
  std::vector<double> dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = delta * y[i] * (1.0 - y[i]) * dy[i];
  return dx;
}

std::vector<double> annealing_softmax(std::span<const double> x, std::size_t channels, std::size_t pixels,
                                      double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("annealing_softmax: temperature must be positive");
  if (channels < 2) throw InvalidArgument("annealing_softmax: need at least two channels");
  if (pixels == 0 || x.size() % (channels * pixels) != 0) {
    throw InvalidInput("annealing_softmax: input size is not a multiple of channels*pixels");
  }
  require_finite(x, "annealing_softmax");
  const std::size_t block = channels * pixels;
  const std::size_t samples = x.size() / block;
  const double inv_t = 1.0 / temperature;
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < samples; ++n) {
    const double* xs = x.data() + n * block;
    double* ys = y.data() + n * block;
    for (std::size_t p = 0; p < pixels; ++p) {
      double mx = xs[p];
      for (std::size_t c = 1; c < channels; ++c) mx = std::max(mx, xs[c * pixels + p]);
      double sum = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double e = std::exp((xs[c * pixels + p] - mx) * inv_t);
        ys[c * pixels + p] = e;
        sum += e;
      }
      const double inv_sum = 1.0 / sum;
      for (std::size_t c = 0; c < channels; ++c) ys[c * pixels + p] *= inv_sum;
    }
  }
  return y;
}

std::vector<double> annealing_softmax_backward(std::span<const double> y, std::span<const double> dy,
                                               std::size_t channels, std::size_t pixels, double temperature) {
  if (y.size() != dy.size()) throw InvalidInput("annealing_softmax_backward: size mismatch");
  if (channels == 0 || pixels == 0 || y.size() % (channels * pixels) != 0) {
    throw InvalidInput("annealing_softmax_backward: input size is not a multiple of channels*pixels");
  }
  const std::size_t block = channels * pixels;
  const std::size_t samples = y.size() / block;
  const double inv_t = 1.0 / temperature;
  std::vector<double> dx(y.size());
  for (std::size_t n = 0; n < samples; ++n) {
    const std::size_t base = n * block;
    for (std::size_t p = 0; p < pixels; ++p) {
      double dot = 0.0;
      for (std::size_t c = 0; c < channels; ++c) dot += y[base + c * pixels + p] * dy[base + c * pixels + p];
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t i = base + c * pixels + p;
        dx[i] = y[i] * (dy[i] - dot) * inv_t;
      }
    }
  }
  return dx;
}

LabelMask discretize(const SoftMask& soft, MaskMode mode) {
  LabelMask out(soft.height, soft.width);
  const std::size_t pixels = soft.pixels();
  if (soft.values.size() != soft.channels * pixels) throw InvalidInput("discretize: malformed soft mask");
  if (mode == MaskMode::kBinary) {
    if (soft.channels != 1) throw InvalidInput("discretize: binary mode expects one channel");
    for (std::size_t p = 0; p < pixels; ++p) {
      const double v = soft.values[p];
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("discretize: binary probability outside [0,1]");
      out.labels[p] = v > 0.5 ? 1 : 0;
    }
    return out;
  }
  if (soft.channels < 2 || soft.channels > 256) throw InvalidInput("discretize: multilabel needs 2..256 channels");
  for (std::size_t p = 0; p < pixels; ++p) {
    double sum = 0.0;
    std::size_t best = 0;
    double best_v = soft.values[p];
    for (std::size_t c = 0; c < soft.channels; ++c) {
      const double v = soft.values[c * pixels + p];
      sum += v;
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    if (std::abs(sum - 1.0) > 1e-4) {
      throw InvalidInput("discretize: channel sum " + std::to_string(sum) + " at pixel " + std::to_string(p));
    }
    out.labels[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace depas
