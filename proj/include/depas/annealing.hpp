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

#ifndef DEPAS_ANNEALING_HPP
#define DEPAS_ANNEALING_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "depas/mask.hpp"

namespace depas {

// Schedule parameters shared by the slope and temperature annealers. Both are
// piecewise constant in the epoch and step once every `interval_epochs`.
struct AnnealConfig {
  double delta_step = 1.0;
  double temp_divisor = 1.25;
  int interval_epochs = 10;

  void validate() const;
};

// Sigmoid slope for `epoch`: 1 + delta_step * floor(epoch / interval).
[[nodiscard]] double slope_at(int epoch, const AnnealConfig& config = {});
// Softmax temperature for `epoch`: temp_divisor ^ -floor(epoch / interval).
[[nodiscard]] double temperature_at(int epoch, const AnnealConfig& config = {});

// Sharpness of the discrete head during one epoch. Immutable once built.
struct AnnealState {
  int epoch = 0;
  double delta = 1.0;
  double temperature = 1.0;
  AnnealConfig config;

  [[nodiscard]] static AnnealState at(int epoch, const AnnealConfig& config = {});
};

// y = 1 / (1 + exp(-delta * x)), elementwise.
[[nodiscard]] std::vector<double> annealing_sigmoid(std::span<const double> x, double delta);
[[nodiscard]] double annealing_sigmoid(double x, double delta);
// dL/dx given the forward output y and upstream dL/dy: delta * y * (1 - y) * dy.
[[nodiscard]] std::vector<double> annealing_sigmoid_backward(std::span<const double> y,
                                                             std::span<const double> dy, double delta);

// Channel softmax at temperature T over consecutive (channels x pixels)
// blocks: x holds N samples laid out C-major, each C*pixels long. The channel
// maximum is subtracted per pixel before exponentiation.
[[nodiscard]] std::vector<double> annealing_softmax(std::span<const double> x, std::size_t channels,
                                                    std::size_t pixels, double temperature);
// dL/dx_c = y_c (dy_c - sum_j y_j dy_j) / T, same layout as the forward pass.
[[nodiscard]] std::vector<double> annealing_softmax_backward(std::span<const double> y,
                                                             std::span<const double> dy, std::size_t channels,
                                                             std::size_t pixels, double temperature);

// Inference-time discretizers: step at p > 0.5 (binary, air = 1) or
// per-pixel argmax with ties to the lowest channel (multilabel).
[[nodiscard]] LabelMask discretize(const SoftMask& soft, MaskMode mode);

}  // namespace depas

#endif  // DEPAS_ANNEALING_HPP
