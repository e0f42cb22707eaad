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

#include "depas/discriminator.hpp"

#include <cmath>

#include "depas/annealing.hpp"
#include "depas/errors.hpp"

namespace depas {

void DiscriminatorConfig::validate() const {
  if (base_channels == 0) throw ConfigError("discriminator base_channels must be positive");
  if (max_channels < base_channels) throw ConfigError("discriminator max_channels below base_channels");
  if (min_height == 0) throw ConfigError("discriminator min_height must be positive");
}

Discriminator::Discriminator(const std::string& name, const DiscriminatorConfig& config, std::size_t in_channels,
                             std::size_t height, std::size_t width)
    : channels_(in_channels), height_(height), width_(width) {
  config.validate();
  std::size_t ch_in = in_channels;
  std::size_t ch_out = config.base_channels;
  std::size_t h = height;
  std::size_t w = width;
  while (h > config.min_height && h % 2 == 0 && w % 2 == 0) {
    const std::string layer = name + ".conv" + std::to_string(convs_.size());
    convs_.emplace_back(layer, ch_in, ch_out, nn::ConvGeometry{4, 2, 1});
    if (convs_.size() > 1) norms_.emplace_back(name + ".norm" + std::to_string(convs_.size() - 1), ch_out);
    acts_.emplace_back(0.2);
    h /= 2;
    w /= 2;
    ch_in = ch_out;
    ch_out = std::min(ch_out * 2, config.max_channels);
  }
  feature_dims_ = {1, ch_in, h, w};
  out_ = nn::Linear(name + ".out", ch_in * h * w, 1, true);
}

void Discriminator::initialize(nn::Rng& rng) {
  for (auto& c : convs_) nn::fill_normal(c.weight().value, rng, 0.0, 0.02);
  for (auto& n : norms_) {
    nn::fill_normal(n.gamma().value, rng, 1.0, 0.02);
    n.beta().value.fill(0.0);
  }
  nn::fill_normal(out_.weight().value, rng, 0.0, 0.02);
  out_.bias().value.fill(0.0);
}

std::vector<double> Discriminator::forward(const Tensor& x, bool training) {
  if (x.c() != channels_ || x.h() != height_ || x.w() != width_) {
    throw InvalidInput("discriminator expects (" + std::to_string(channels_) + ", " + std::to_string(height_) +
                       ", " + std::to_string(width_) + ") inputs, got " + x.shape_string());
  }
  Tensor a = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    a = convs_[i].forward(a);
    if (i > 0) a = norms_[i - 1].forward(a, training);
    a = acts_[i].forward(a);
  }
  a.reshape({a.n(), a.sample_size(), 1, 1});
  Tensor logits = out_.forward(a);
  probs_ = annealing_sigmoid(logits.values(), 1.0);
  return probs_;
}

Tensor Discriminator::backward(std::span<const double> d_prob) {
  if (d_prob.size() != probs_.size()) throw InvalidInput("discriminator backward: batch size mismatch");
  Tensor g(probs_.size(), 1, 1, 1);
  for (std::size_t i = 0; i < probs_.size(); ++i) g[i] = d_prob[i] * probs_[i] * (1.0 - probs_[i]);
  g = out_.backward(g);
  g.reshape({g.n(), feature_dims_[1], feature_dims_[2], feature_dims_[3]});
  for (std::size_t i = convs_.size(); i-- > 0;) {
    g = acts_[i].backward(g);
    if (i > 0) g = norms_[i - 1].backward(g);
    g = convs_[i].backward(g);
  }
  return g;
}

std::vector<nn::Parameter*> Discriminator::parameters() {
  std::vector<nn::Parameter*> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect(out);
    if (i > 0) norms_[i - 1].collect(out);
  }
  out_.collect(out);
  return out;
}

std::vector<nn::Buffer> Discriminator::buffers() {
  std::vector<nn::Buffer> out;
  for (auto& n : norms_) n.collect_buffers(out);
  return out;
}

void Discriminator::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

DiscriminatorBank::DiscriminatorBank(const DiscriminatorConfig& config, std::size_t in_channels, std::size_t height,
                                     std::size_t width) {
  for (std::size_t r = 0; r < kNumScales; ++r) {
    const std::size_t k = kScaleWindows[r];
    if (height % k != 0 || width % k != 0) throw ConfigError("discriminator bank: mask not divisible by 4");
    members[r] = Discriminator("disc" + std::to_string(r), config, in_channels, height / k, width / k);
  }
}

void DiscriminatorBank::initialize(std::uint64_t seed) {
  nn::Rng rng(seed);
  for (auto& d : members) d.initialize(rng);
}

std::vector<nn::Parameter*> DiscriminatorBank::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& d : members) {
    auto p = d.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<nn::Buffer> DiscriminatorBank::buffers() {
  std::vector<nn::Buffer> out;
  for (auto& d : members) {
    auto b = d.buffers();
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

void DiscriminatorBank::zero_grad() {
  for (auto& d : members) d.zero_grad();
}

Tensor downsample_mask(const Tensor& mask, std::size_t window) {
  if (window == 0) throw InvalidInput("downsample_mask: window must be positive");
  if (mask.h() % window != 0 || mask.w() % window != 0) {
    throw InvalidInput("downsample_mask: " + mask.shape_string() + " not divisible by " + std::to_string(window));
  }
  if (window == 1) return mask;
  const std::size_t oh = mask.h() / window;
  const std::size_t ow = mask.w() / window;
  Tensor out(mask.n(), mask.c(), oh, ow);
  const double inv = 1.0 / static_cast<double>(window * window);
  for (std::size_t n = 0; n < mask.n(); ++n) {
    for (std::size_t c = 0; c < mask.c(); ++c) {
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          double s = 0.0;
          for (std::size_t dy = 0; dy < window; ++dy) {
            for (std::size_t dx = 0; dx < window; ++dx) s += mask.at(n, c, y * window + dy, x * window + dx);
          }
          out.at(n, c, y, x) = s * inv;
        }
      }
    }
  }
  return out;
}

Tensor downsample_mask_backward(const Tensor& d_pooled, std::size_t window) {
  if (window == 1) return d_pooled;
  Tensor out(d_pooled.n(), d_pooled.c(), d_pooled.h() * window, d_pooled.w() * window);
  const double inv = 1.0 / static_cast<double>(window * window);
  for (std::size_t n = 0; n < out.n(); ++n) {
    for (std::size_t c = 0; c < out.c(); ++c) {
      for (std::size_t y = 0; y < out.h(); ++y) {
        for (std::size_t x = 0; x < out.w(); ++x) out.at(n, c, y, x) = d_pooled.at(n, c, y / window, x / window) * inv;
      }
    }
  }
  return out;
}

double gan_loss_at_scale(double d_real, double d_fake) {
  return std::log(clamp_probability(d_real)) + std::log(1.0 - clamp_probability(d_fake));
}

double gan_loss_at_scale(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.size() != d_fake.size() || d_real.empty()) {
    throw InvalidInput("gan_loss_at_scale: real and fake batches must be non-empty and equal-sized");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < d_real.size(); ++i) s += gan_loss_at_scale(d_real[i], d_fake[i]);
  return s / static_cast<double>(d_real.size());
}

MultiscaleObjective combine_scales(const std::array<ScaleOutputs, kNumScales>& outputs,
                                   const std::array<double, kNumScales>& alphas) {
  MultiscaleObjective obj;
  for (std::size_t r = 0; r < kNumScales; ++r) {
    obj.per_scale[r] = gan_loss_at_scale(outputs[r].real, outputs[r].fake);
    obj.total += alphas[r] * obj.per_scale[r];
  }
  return obj;
}

MultiscaleObjective multiscale_objective(const Tensor& real_mask, const Tensor& fake_mask, DiscriminatorBank& bank,
                                         bool training) {
  if (!real_mask.same_shape(fake_mask)) throw InvalidInput("multiscale_objective: real/fake shape mismatch");
  std::array<ScaleOutputs, kNumScales> outputs;
  for (std::size_t r = 0; r < kNumScales; ++r) {
    outputs[r].real = bank.members[r].forward(downsample_mask(real_mask, kScaleWindows[r]), training);
    outputs[r].fake = bank.members[r].forward(downsample_mask(fake_mask, kScaleWindows[r]), training);
  }
  return combine_scales(outputs, bank.alphas);
}

}  // namespace depas
