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

#ifndef DEPAS_GENERATOR_HPP
#define DEPAS_GENERATOR_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "depas/annealing.hpp"
#include "depas/mask.hpp"
#include "depas/nn.hpp"
#include "depas/tensor.hpp"

namespace depas {

struct GeneratorConfig {
  std::size_t latent_dim = 100;
  std::size_t num_blocks = 5;
  // Channels of the last transpose block; doubled for each earlier block.
  std::size_t base_channels = 8;
  std::size_t output_height = 64;
  std::size_t output_width = 128;
  // 1 selects the binary sigmoid head, >= 2 the multilabel softmax head.
  std::size_t num_labels = 1;
  // Spatial noise multiplier per transpose block; empty means 0.1 everywhere.
  std::vector<double> noise_scales;

  void validate() const;
  [[nodiscard]] MaskMode mode() const { return num_labels == 1 ? MaskMode::kBinary : MaskMode::kMultilabel; }
  [[nodiscard]] std::size_t seed_height() const { return output_height >> num_blocks; }
  [[nodiscard]] std::size_t seed_width() const { return output_width >> num_blocks; }
  [[nodiscard]] std::size_t block_channels(std::size_t block) const;
  [[nodiscard]] double noise_scale(std::size_t block) const;
  // Spatial size of transpose block `block`'s output.
  [[nodiscard]] std::size_t block_height(std::size_t block) const { return seed_height() << (block + 1); }
  [[nodiscard]] std::size_t block_width(std::size_t block) const { return seed_width() << (block + 1); }
};

// Generator input: a channel-wise Gaussian vector plus one Gaussian field per
// transpose block, at that block's output resolution.
struct LatentSample {
  std::vector<double> channel_vector;
  std::vector<Tensor> spatial_fields;  // each (1, 1, h_i, w_i)
};

[[nodiscard]] LatentSample sample_latent(std::uint64_t seed, const GeneratorConfig& config);
[[nodiscard]] LatentSample sample_latent(nn::Rng& rng, const GeneratorConfig& config);
[[nodiscard]] std::vector<LatentSample> sample_latent_batch(nn::Rng& rng, const GeneratorConfig& config,
                                                            std::size_t count);

// feature_map + scale * field, the (H, W) field broadcast across every
// channel of every sample. `field` is (1, 1, H, W) or (N, 1, H, W).
[[nodiscard]] Tensor inject_spatial_noise(const Tensor& feature_map, const Tensor& field, double scale);

// Projection of z to a (C0, h0, 2 h0) seed grid, `num_blocks` transpose
// convolutions (k4 s2 p1) each followed by batch norm, spatial noise and
// ReLU, then a 1x1 convolution and the annealed sigmoid/softmax head.
class Generator {
 public:
  explicit Generator(const GeneratorConfig& config);

  // DCGAN initialization: weights ~ N(0, 0.02), BN scale ~ N(1, 0.02), shifts 0.
  void initialize(std::uint64_t seed);

  // Batched forward pass; output is (N, num_labels, H, W). Caches activations
  // for backward() when `training`.
  Tensor forward(const std::vector<LatentSample>& batch, const AnnealState& anneal, bool training);
  // Accumulates parameter gradients from dL/d(output).
  void backward(const Tensor& d_output);

  // Single-sample evaluation-mode generation.
  SoftMask generate(const LatentSample& latent, const AnnealState& anneal);

  std::vector<nn::Parameter*> parameters();
  std::vector<nn::Buffer> buffers();
  void zero_grad();
  [[nodiscard]] const GeneratorConfig& config() const { return config_; }

 private:
  struct Block {
    nn::ConvTranspose2d deconv;
    nn::BatchNorm2d norm;
    nn::LeakyRelu relu;
  };

  GeneratorConfig config_;
  nn::Linear project_;
  nn::BatchNorm2d project_norm_;
  nn::LeakyRelu project_relu_;
  std::vector<Block> blocks_;
  nn::Conv2d head_;
  Tensor output_;
  AnnealState anneal_;
};

[[nodiscard]] Generator init_generator(std::uint64_t seed, const GeneratorConfig& config);

}  // namespace depas

#endif  // DEPAS_GENERATOR_HPP
