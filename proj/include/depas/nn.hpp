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

#ifndef DEPAS_NN_HPP
#define DEPAS_NN_HPP

// Minimal layer toolkit with explicit forward/backward passes. Each layer
// caches what it needs from its most recent forward call; backward consumes
// that cache, accumulates parameter gradients and returns the input gradient.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "depas/tensor.hpp"

namespace depas::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor::Dims dims) : name(std::move(n)), value(dims), grad(dims) {}
  void zero_grad() { grad.fill(0.0); }
};

// Non-learned state that still belongs in a checkpoint (running statistics).
struct Buffer {
  std::string name;
  Tensor* tensor;
};

using Rng = std::mt19937_64;

// Draws N(mean, stddev) entries into `t`.
void fill_normal(Tensor& t, Rng& rng, double mean, double stddev);

// Fully connected layer on (N, in, 1, 1) inputs, producing (N, out, 1, 1).
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in_features, std::size_t out_features, bool bias = true);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

  void collect(std::vector<Parameter*>& out);
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  [[nodiscard]] std::size_t in_features() const { return in_; }
  [[nodiscard]] std::size_t out_features() const { return out_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  bool has_bias_ = true;
  Parameter weight_;  // (out, in)
  Parameter bias_;    // (out)
  Tensor input_;
};

struct ConvGeometry {
  std::size_t kernel = 4;
  std::size_t stride = 2;
  std::size_t padding = 1;
};

// 2-D convolution, weight layout (out, in, k, k), optional per-channel bias.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry,
         bool bias = false);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

  void collect(std::vector<Parameter*>& out);
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  [[nodiscard]] std::size_t output_size(std::size_t input) const;

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  ConvGeometry geo_;
  bool has_bias_ = false;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

// Transposed 2-D convolution, weight layout (in, out, k, k), no bias.
// Output size (in - 1) * stride - 2 * padding + kernel.
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(const std::string& name, std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

  void collect(std::vector<Parameter*>& out);
  Parameter& weight() { return weight_; }
  [[nodiscard]] std::size_t output_size(std::size_t input) const;

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  ConvGeometry geo_;
  Parameter weight_;
  Tensor input_;
};

// Per-channel batch normalization. Training mode normalizes with batch
// statistics and updates running estimates (momentum 0.1, unbiased variance);
// evaluation mode uses the running estimates.
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, std::size_t channels, double momentum = 0.1, double eps = 1e-5);

  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& dy);

  void collect(std::vector<Parameter*>& out);
  void collect_buffers(std::vector<Buffer>& out);
  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }

 private:
  std::string name_;
  std::size_t channels_ = 0;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Parameter gamma_;
  Parameter beta_;
  Tensor running_mean_;
  Tensor running_var_;
  Tensor xhat_;
  std::vector<double> inv_std_;
  bool cached_training_ = true;
};

// max(x, slope * x); slope 0 gives ReLU.
class LeakyRelu {
 public:
  explicit LeakyRelu(double slope = 0.0) : slope_(slope) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy) const;

 private:
  double slope_;
  Tensor input_;
};

}  // namespace depas::nn

#endif  // DEPAS_NN_HPP
