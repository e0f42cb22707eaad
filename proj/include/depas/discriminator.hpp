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

#ifndef DEPAS_DISCRIMINATOR_HPP
#define DEPAS_DISCRIMINATOR_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "depas/nn.hpp"
#include "depas/tensor.hpp"

namespace depas {

inline constexpr std::size_t kNumScales = 3;
// Average-pooling windows feeding the 100%, 50% and 25% discriminators.
inline constexpr std::array<std::size_t, kNumScales> kScaleWindows{1, 2, 4};
inline constexpr double kProbabilityEpsilon = 1e-7;

struct DiscriminatorConfig {
  std::size_t base_channels = 8;
  std::size_t max_channels = 64;
  // Strided convolutions stop once the feature map is this tall.
  std::size_t min_height = 4;

  void validate() const;
};

// Real/fake classifier: stride-2 convolutions (k4 p1), batch norm on all but
// the first, LeakyReLU(0.2), then a dense layer over the remaining feature map
// to one logit and a sigmoid.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const std::string& name, const DiscriminatorConfig& config, std::size_t in_channels,
                std::size_t height, std::size_t width);

  void initialize(nn::Rng& rng);

  // Per-sample probability that the input is real.
  std::vector<double> forward(const Tensor& x, bool training);
  // Accumulates parameter gradients from dL/d(probability); returns dL/dx.
  Tensor backward(std::span<const double> d_prob);

  std::vector<nn::Parameter*> parameters();
  std::vector<nn::Buffer> buffers();
  void zero_grad();

  [[nodiscard]] std::size_t input_height() const { return height_; }
  [[nodiscard]] std::size_t input_width() const { return width_; }
  [[nodiscard]] std::size_t input_channels() const { return channels_; }
  [[nodiscard]] std::size_t depth() const { return convs_.size(); }
  nn::Linear& output_layer() { return out_; }

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::BatchNorm2d> norms_;  // norms_[i] follows convs_[i + 1]
  std::vector<nn::LeakyRelu> acts_;
  nn::Linear out_;
  Tensor::Dims feature_dims_{};
  std::vector<double> probs_;
};

// The three scale discriminators and their objective weights.
struct DiscriminatorBank {
  std::array<Discriminator, kNumScales> members;
  std::array<double, kNumScales> alphas{1.0, 1.0, 1.0};

  DiscriminatorBank() = default;
  DiscriminatorBank(const DiscriminatorConfig& config, std::size_t in_channels, std::size_t height,
                    std::size_t width);

  void initialize(std::uint64_t seed);
  std::vector<nn::Parameter*> parameters();
  std::vector<nn::Buffer> buffers();
  void zero_grad();
};

// Non-overlapping average pooling with a square window; window 1 copies.
[[nodiscard]] Tensor downsample_mask(const Tensor& mask, std::size_t window);
// Adjoint of downsample_mask: spreads each gradient evenly over its window.
[[nodiscard]] Tensor downsample_mask_backward(const Tensor& d_pooled, std::size_t window);

[[nodiscard]] inline double clamp_probability(double p) {
  return p < kProbabilityEpsilon ? kProbabilityEpsilon : (p > 1.0 - kProbabilityEpsilon ? 1.0 - kProbabilityEpsilon : p);
}

// log D(x) + log(1 - D(G(z))) with probabilities clamped to [1e-7, 1 - 1e-7].
[[nodiscard]] double gan_loss_at_scale(double d_real, double d_fake);
// Batch mean of gan_loss_at_scale over paired samples.
[[nodiscard]] double gan_loss_at_scale(std::span<const double> d_real, std::span<const double> d_fake);

struct ScaleOutputs {
  std::vector<double> real;
  std::vector<double> fake;
};

struct MultiscaleObjective {
  double total = 0.0;
  std::array<double, kNumScales> per_scale{};
};

// Sum over scales of alpha_r * gan_loss_at_scale(real_r, fake_r).
[[nodiscard]] MultiscaleObjective combine_scales(const std::array<ScaleOutputs, kNumScales>& outputs,
                                                 const std::array<double, kNumScales>& alphas);

// Evaluates every bank member on the pooled real and fake masks.
[[nodiscard]] MultiscaleObjective multiscale_objective(const Tensor& real_mask, const Tensor& fake_mask,
                                                       DiscriminatorBank& bank, bool training = false);

}  // namespace depas

#endif  // DEPAS_DISCRIMINATOR_HPP
