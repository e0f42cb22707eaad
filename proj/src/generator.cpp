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

#include "depas/generator.hpp"

#include <cmath>
#include <string>

#include "depas/errors.hpp"

namespace depas {

void GeneratorConfig::validate() const {
  if (latent_dim == 0) throw ConfigError("generator latent_dim must be positive");
  if (num_blocks == 0 || num_blocks > 12) throw ConfigError("generator num_blocks must be in 1..12");
  if (base_channels == 0) throw ConfigError("generator base_channels must be positive");
  if (num_labels == 0 || num_labels > 255) throw ConfigError("generator num_labels must be in 1..255");
  if (output_width != 2 * output_height) throw ConfigError("generator output_width must equal 2 * output_height");
  const std::size_t factor = std::size_t{1} << num_blocks;
  if (output_height % factor != 0 || output_height < factor) {
    throw ConfigError("generator output_height " + std::to_string(output_height) + " not reachable by " +
                      std::to_string(num_blocks) + " doublings");
  }
  if (!noise_scales.empty() && noise_scales.size() != num_blocks) {
    throw ConfigError("generator noise_scales needs one entry per block");
  }
  for (double s : noise_scales) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("generator noise_scales must be non-negative");
  }
}

std::size_t GeneratorConfig::block_channels(std::size_t block) const {
  return base_channels << (num_blocks - 1 - block);
}

double GeneratorConfig::noise_scale(std::size_t block) const {
  return noise_scales.empty() ? 0.1 : noise_scales.at(block);
}

LatentSample sample_latent(nn::Rng& rng, const GeneratorConfig& config) {
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentSample s;
  s.channel_vector.resize(config.latent_dim);
  for (auto& v : s.channel_vector) v = normal(rng);
  s.spatial_fields.reserve(config.num_blocks);
  for (std::size_t b = 0; b < config.num_blocks; ++b) {
    Tensor field(1, 1, config.block_height(b), config.block_width(b));
    for (auto& v : field.values()) v = normal(rng);
    s.spatial_fields.push_back(std::move(field));
  }
  return s;
}

LatentSample sample_latent(std::uint64_t seed, const GeneratorConfig& config) {
  config.validate();
  nn::Rng rng(seed);
  return sample_latent(rng, config);
}

std::vector<LatentSample> sample_latent_batch(nn::Rng& rng, const GeneratorConfig& config, std::size_t count) {
  std::vector<LatentSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_latent(rng, config));
  return out;
}

Tensor inject_spatial_noise(const Tensor& feature_map, const Tensor& field, double scale) {
  if (field.c() != 1 || field.h() != feature_map.h() || field.w() != feature_map.w() ||
      (field.n() != 1 && field.n() != feature_map.n())) {
    throw InvalidInput("inject_spatial_noise: field " + field.shape_string() + " does not match feature map " +
                       feature_map.shape_string());
  }
  Tensor out = feature_map;
  if (scale == 0.0) return out;
  const std::size_t plane = feature_map.plane_size();
  for (std::size_t n = 0; n < feature_map.n(); ++n) {
    const double* f = field.data() + (field.n() == 1 ? 0 : n * plane);
    for (std::size_t c = 0; c < feature_map.c(); ++c) {
      double* dst = out.data() + (n * feature_map.c() + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] += scale * f[i];
    }
  }
  return out;
}

Generator::Generator(const GeneratorConfig& config) : config_(config) {
  config_.validate();
  const std::size_t c0 = config_.block_channels(0);
  project_ = nn::Linear("gen.project", config_.latent_dim, c0 * config_.seed_height() * config_.seed_width(), false);
  project_norm_ = nn::BatchNorm2d("gen.project_norm", c0);
  std::size_t in = c0;
  for (std::size_t b = 0; b < config_.num_blocks; ++b) {
    const std::string name = "gen.block" + std::to_string(b);
    const std::size_t out = config_.block_channels(b);
    blocks_.push_back(Block{nn::ConvTranspose2d(name + ".deconv", in, out, nn::ConvGeometry{4, 2, 1}),
                            nn::BatchNorm2d(name + ".norm", out), nn::LeakyRelu(0.0)});
    in = out;
  }
  head_ = nn::Conv2d("gen.head", in, config_.num_labels, nn::ConvGeometry{1, 1, 0}, true);
}

void Generator::initialize(std::uint64_t seed) {
  nn::Rng rng(seed);
  nn::fill_normal(project_.weight().value, rng, 0.0, 0.02);
  nn::fill_normal(project_norm_.gamma().value, rng, 1.0, 0.02);
  project_norm_.beta().value.fill(0.0);
  for (auto& b : blocks_) {
    nn::fill_normal(b.deconv.weight().value, rng, 0.0, 0.02);
    nn::fill_normal(b.norm.gamma().value, rng, 1.0, 0.02);
    b.norm.beta().value.fill(0.0);
  }
  nn::fill_normal(head_.weight().value, rng, 0.0, 0.02);
  head_.bias().value.fill(0.0);
}

Tensor Generator::forward(const std::vector<LatentSample>& batch, const AnnealState& anneal, bool training) {
  if (batch.empty()) throw InvalidInput("generator: empty latent batch");
  const std::size_t n = batch.size();
  Tensor z(n, config_.latent_dim, 1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = batch[i];
    if (s.channel_vector.size() != config_.latent_dim || s.spatial_fields.size() != config_.num_blocks) {
      throw ConfigError("generator: latent sample does not match configuration");
    }
    std::copy(s.channel_vector.begin(), s.channel_vector.end(), z.sample(i).begin());
  }
  Tensor x = project_.forward(z);
  x.reshape({n, config_.block_channels(0), config_.seed_height(), config_.seed_width()});
  x = project_relu_.forward(project_norm_.forward(x, training));
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    auto& block = blocks_[b];
    x = block.norm.forward(block.deconv.forward(x), training);
    const double scale = config_.noise_scale(b);
    if (scale != 0.0) {
      Tensor fields(n, 1, x.h(), x.w());
      for (std::size_t i = 0; i < n; ++i) {
        const Tensor& f = batch[i].spatial_fields[b];
        if (f.h() != x.h() || f.w() != x.w()) throw ConfigError("generator: spatial field resolution mismatch");
        std::copy(f.values().begin(), f.values().end(), fields.sample(i).begin());
      }
      x = inject_spatial_noise(x, fields, scale);
    }
    x = block.relu.forward(x);
  }
  Tensor logits = head_.forward(x);
  Tensor out(logits.dims());
  std::vector<double> probs = config_.mode() == MaskMode::kBinary
                                  ? annealing_sigmoid(logits.values(), anneal.delta)
                                  : annealing_softmax(logits.values(), config_.num_labels, logits.plane_size(),
                                                      anneal.temperature);
  std::copy(probs.begin(), probs.end(), out.values().begin());
  output_ = out;
  anneal_ = anneal;
  return out;
}

void Generator::backward(const Tensor& d_output) {
  if (!d_output.same_shape(output_)) throw InvalidInput("generator backward: gradient shape mismatch");
  std::vector<double> dl = config_.mode() == MaskMode::kBinary
                               ? annealing_sigmoid_backward(output_.values(), d_output.values(), anneal_.delta)
                               : annealing_softmax_backward(output_.values(), d_output.values(), config_.num_labels,
                                                            output_.plane_size(), anneal_.temperature);
  Tensor g(output_.dims());
  std::copy(dl.begin(), dl.end(), g.values().begin());
  g = head_.backward(g);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    g = it->deconv.backward(it->norm.backward(it->relu.backward(g)));
  }
  g = project_norm_.backward(project_relu_.backward(g));
  g.reshape({g.n(), project_.out_features(), 1, 1});
  (void)project_.backward(g);
}

SoftMask Generator::generate(const LatentSample& latent, const AnnealState& anneal) {
  Tensor out = forward({latent}, anneal, false);
  return SoftMask::from_batch(out, 0);
}

std::vector<nn::Parameter*> Generator::parameters() {
  std::vector<nn::Parameter*> out;
  project_.collect(out);
  project_norm_.collect(out);
  for (auto& b : blocks_) {
    b.deconv.collect(out);
    b.norm.collect(out);
  }
  head_.collect(out);
  return out;
}

std::vector<nn::Buffer> Generator::buffers() {
  std::vector<nn::Buffer> out;
  project_norm_.collect_buffers(out);
  for (auto& b : blocks_) b.norm.collect_buffers(out);
  return out;
}

void Generator::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

Generator init_generator(std::uint64_t seed, const GeneratorConfig& config) {
  Generator g(config);
  g.initialize(seed);
  return g;
}

}  // namespace depas
