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

#include "depas/nn.hpp"

#include <Eigen/Core>
#include <cmath>

#include "depas/errors.hpp"

namespace depas::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

// Unfolds a (C, H, W) plane stack into (C*k*k, Ho*Wo) patch columns.
void im2col(const double* src, std::size_t channels, std::size_t height, std::size_t width,
            const ConvGeometry& g, std::size_t out_h, std::size_t out_w, double* cols) {
  const std::size_t k = g.kernel;
  const std::size_t cols_per_row = out_h * out_w;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = src + c * height * width;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        double* row = cols + ((c * k + ki) * k + kj) * cols_per_row;
        for (std::size_t oh = 0; oh < out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
          double* dst = row + oh * out_w;
          if (ih < 0 || ih >= static_cast<long>(height)) {
            for (std::size_t ow = 0; ow < out_w; ++ow) dst[ow] = 0.0;
            continue;
          }
          const double* line = plane + static_cast<std::size_t>(ih) * width;
          for (std::size_t ow = 0; ow < out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
            dst[ow] = (iw < 0 || iw >= static_cast<long>(width)) ? 0.0 : line[iw];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters patch columns back, accumulating into dst.
void col2im(const double* cols, std::size_t channels, std::size_t height, std::size_t width,
            const ConvGeometry& g, std::size_t out_h, std::size_t out_w, double* dst) {
  const std::size_t k = g.kernel;
  const std::size_t cols_per_row = out_h * out_w;
  for (std::size_t c = 0; c < channels; ++c) {
    double* plane = dst + c * height * width;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const double* row = cols + ((c * k + ki) * k + kj) * cols_per_row;
        for (std::size_t oh = 0; oh < out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
          if (ih < 0 || ih >= static_cast<long>(height)) continue;
          double* line = plane + static_cast<std::size_t>(ih) * width;
          const double* src = row + oh * out_w;
          for (std::size_t ow = 0; ow < out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
            if (iw >= 0 && iw < static_cast<long>(width)) line[iw] += src[ow];
          }
        }
      }
    }
  }
}

std::size_t conv_out(std::size_t input, const ConvGeometry& g) {
  const long v = static_cast<long>(input + 2 * g.padding) - static_cast<long>(g.kernel);
  if (v < 0) throw InvalidInput("convolution input smaller than kernel");
  return static_cast<std::size_t>(v) / g.stride + 1;
}

}  // namespace

void fill_normal(Tensor& t, Rng& rng, double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  for (auto& v : t.values()) v = dist(rng);
}

// --- Linear ---------------------------------------------------------------

Linear::Linear(const std::string& name, std::size_t in_features, std::size_t out_features, bool bias)
    : in_(in_features),
      out_(out_features),
      has_bias_(bias),
      weight_(name + ".weight", {1, 1, out_features, in_features}),
      bias_(name + ".bias", {1, out_features, 1, 1}) {}

Tensor Linear::forward(const Tensor& x) {
  if (x.sample_size() != in_) {
    throw InvalidInput("linear: expected " + std::to_string(in_) + " features, got " + x.shape_string());
  }
  input_ = x;
  Tensor y(x.n(), out_, 1, 1);
  ConstMatMap xin(x.data(), static_cast<long>(x.n()), static_cast<long>(in_));
  ConstMatMap w(weight_.value.data(), static_cast<long>(out_), static_cast<long>(in_));
  MatMap out(y.data(), static_cast<long>(x.n()), static_cast<long>(out_));
  out.noalias() = xin * w.transpose();
  if (has_bias_) {
    Eigen::Map<const Eigen::RowVectorXd> b(bias_.value.data(), static_cast<long>(out_));
    out.rowwise() += b;
  }
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  const auto n = static_cast<long>(input_.n());
  Tensor dx(input_.dims());
  ConstMatMap g(dy.data(), n, static_cast<long>(out_));
  ConstMatMap xin(input_.data(), n, static_cast<long>(in_));
  ConstMatMap w(weight_.value.data(), static_cast<long>(out_), static_cast<long>(in_));
  MatMap dw(weight_.grad.data(), static_cast<long>(out_), static_cast<long>(in_));
  dw.noalias() += g.transpose() * xin;
  if (has_bias_) {
    Eigen::Map<Eigen::RowVectorXd> db(bias_.grad.data(), static_cast<long>(out_));
    db += g.colwise().sum();
  }
  MatMap dxm(dx.data(), n, static_cast<long>(in_));
  dxm.noalias() = g * w;
  return dx;
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// --- Conv2d ---------------------------------------------------------------

Conv2d::Conv2d(const std::string& name, std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry,
               bool bias)
    : in_(in_channels),
      out_(out_channels),
      geo_(geometry),
      has_bias_(bias),
      weight_(name + ".weight", {out_channels, in_channels, geometry.kernel, geometry.kernel}),
      bias_(name + ".bias", {1, out_channels, 1, 1}) {}

std::size_t Conv2d::output_size(std::size_t input) const { return conv_out(input, geo_); }

Tensor Conv2d::forward(const Tensor& x) {
  if (x.c() != in_) throw InvalidInput("conv2d: channel mismatch " + x.shape_string());
  input_ = x;
  const std::size_t oh = conv_out(x.h(), geo_);
  const std::size_t ow = conv_out(x.w(), geo_);
  const std::size_t kdim = in_ * geo_.kernel * geo_.kernel;
  const std::size_t pix = oh * ow;
  Tensor y(x.n(), out_, oh, ow);
  AlignedVector cols(kdim * pix);
  ConstMatMap w(weight_.value.data(), static_cast<long>(out_), static_cast<long>(kdim));
  for (std::size_t n = 0; n < x.n(); ++n) {
    im2col(x.sample(n).data(), in_, x.h(), x.w(), geo_, oh, ow, cols.data());
    ConstMatMap col(cols.data(), static_cast<long>(kdim), static_cast<long>(pix));
    MatMap out(y.sample(n).data(), static_cast<long>(out_), static_cast<long>(pix));
    out.noalias() = w * col;
    if (has_bias_) {
      Eigen::Map<const Eigen::VectorXd> b(bias_.value.data(), static_cast<long>(out_));
      out.colwise() += b;
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  const std::size_t oh = dy.h();
  const std::size_t ow = dy.w();
  const std::size_t kdim = in_ * geo_.kernel * geo_.kernel;
  const std::size_t pix = oh * ow;
  Tensor dx(input_.dims());
  AlignedVector cols(kdim * pix);
  AlignedVector dcols(kdim * pix);
  ConstMatMap w(weight_.value.data(), static_cast<long>(out_), static_cast<long>(kdim));
  MatMap dw(weight_.grad.data(), static_cast<long>(out_), static_cast<long>(kdim));
  for (std::size_t n = 0; n < input_.n(); ++n) {
    im2col(input_.sample(n).data(), in_, input_.h(), input_.w(), geo_, oh, ow, cols.data());
    ConstMatMap col(cols.data(), static_cast<long>(kdim), static_cast<long>(pix));
    ConstMatMap g(dy.sample(n).data(), static_cast<long>(out_), static_cast<long>(pix));
    dw.noalias() += g * col.transpose();
    if (has_bias_) {
      Eigen::Map<Eigen::VectorXd> db(bias_.grad.data(), static_cast<long>(out_));
      db += g.rowwise().sum();
    }
    MatMap dcol(dcols.data(), static_cast<long>(kdim), static_cast<long>(pix));
    dcol.noalias() = w.transpose() * g;
    col2im(dcols.data(), in_, input_.h(), input_.w(), geo_, oh, ow, dx.sample(n).data());
  }
  return dx;
}

void Conv2d::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// --- ConvTranspose2d ------------------------------------------------------

ConvTranspose2d::ConvTranspose2d(const std::string& name, std::size_t in_channels, std::size_t out_channels,
                                 ConvGeometry geometry)
    : in_(in_channels),
      out_(out_channels),
      geo_(geometry),
      weight_(name + ".weight", {in_channels, out_channels, geometry.kernel, geometry.kernel}) {}

std::size_t ConvTranspose2d::output_size(std::size_t input) const {
  const long v = static_cast<long>((input - 1) * geo_.stride + geo_.kernel) - 2 * static_cast<long>(geo_.padding);
  if (input == 0 || v <= 0) throw InvalidInput("conv_transpose2d: empty output");
  return static_cast<std::size_t>(v);
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
  if (x.c() != in_) throw InvalidInput("conv_transpose2d: channel mismatch " + x.shape_string());
  input_ = x;
  const std::size_t oh = output_size(x.h());
  const std::size_t ow = output_size(x.w());
  const std::size_t kdim = out_ * geo_.kernel * geo_.kernel;
  const std::size_t pix = x.h() * x.w();
  Tensor y(x.n(), out_, oh, ow);
  AlignedVector cols(kdim * pix);
  ConstMatMap w(weight_.value.data(), static_cast<long>(in_), static_cast<long>(kdim));
  for (std::size_t n = 0; n < x.n(); ++n) {
    ConstMatMap xin(x.sample(n).data(), static_cast<long>(in_), static_cast<long>(pix));
    MatMap col(cols.data(), static_cast<long>(kdim), static_cast<long>(pix));
    col.noalias() = w.transpose() * xin;
    col2im(cols.data(), out_, oh, ow, geo_, x.h(), x.w(), y.sample(n).data());
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& dy) {
  const std::size_t ih = input_.h();
  const std::size_t iw = input_.w();
  const std::size_t kdim = out_ * geo_.kernel * geo_.kernel;
  const std::size_t pix = ih * iw;
  Tensor dx(input_.dims());
  AlignedVector cols(kdim * pix);
  ConstMatMap w(weight_.value.data(), static_cast<long>(in_), static_cast<long>(kdim));
  MatMap dw(weight_.grad.data(), static_cast<long>(in_), static_cast<long>(kdim));
  for (std::size_t n = 0; n < input_.n(); ++n) {
    im2col(dy.sample(n).data(), out_, dy.h(), dy.w(), geo_, ih, iw, cols.data());
    ConstMatMap dcol(cols.data(), static_cast<long>(kdim), static_cast<long>(pix));
    ConstMatMap xin(input_.sample(n).data(), static_cast<long>(in_), static_cast<long>(pix));
    dw.noalias() += xin * dcol.transpose();
    MatMap dxm(dx.sample(n).data(), static_cast<long>(in_), static_cast<long>(pix));
    dxm.noalias() = w * dcol;
  }
  return dx;
}

void ConvTranspose2d::collect(std::vector<Parameter*>& out) { out.push_back(&weight_); }

// --- BatchNorm2d ----------------------------------------------------------

BatchNorm2d::BatchNorm2d(const std::string& name, std::size_t channels, double momentum, double eps)
    : name_(name),
      channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(name + ".gamma", {1, channels, 1, 1}),
      beta_(name + ".beta", {1, channels, 1, 1}),
      running_mean_(1, channels, 1, 1, 0.0),
      running_var_(1, channels, 1, 1, 1.0) {
  gamma_.value.fill(1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  if (x.c() != channels_) throw InvalidInput("batchnorm: channel mismatch " + x.shape_string());
  const std::size_t plane = x.plane_size();
  const std::size_t count = x.n() * plane;
  Tensor y(x.dims());
  xhat_ = Tensor(x.dims());
  inv_std_.assign(channels_, 0.0);
  cached_training_ = training;
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (training) {
      if (count < 2) throw InvalidInput("batchnorm: training needs more than one value per channel");
      for (std::size_t n = 0; n < x.n(); ++n) {
        const double* p = x.data() + (n * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) mean += p[i];
      }
      mean /= static_cast<double>(count);
      for (std::size_t n = 0; n < x.n(); ++n) {
        const double* p = x.data() + (n * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) var += (p[i] - mean) * (p[i] - mean);
      }
      const double unbiased = var / static_cast<double>(count - 1);
      var /= static_cast<double>(count);
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv_std;
    const double g = gamma_.value[c];
    const double b = beta_.value[c];
    for (std::size_t n = 0; n < x.n(); ++n) {
      const std::size_t off = (n * channels_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (x[off + i] - mean) * inv_std;
        xhat_[off + i] = xh;
        y[off + i] = g * xh + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  const std::size_t plane = dy.plane_size();
  const std::size_t count = dy.n() * plane;
  Tensor dx(dy.dims());
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < dy.n(); ++n) {
      const std::size_t off = (n * channels_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy[off + i];
        sum_dy_xhat += dy[off + i] * xhat_[off + i];
      }
    }
    gamma_.grad[c] += sum_dy_xhat;
    beta_.grad[c] += sum_dy;
    const double g = gamma_.value[c];
    const double scale = g * inv_std_[c];
    if (!cached_training_) {
      for (std::size_t n = 0; n < dy.n(); ++n) {
        const std::size_t off = (n * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) dx[off + i] = scale * dy[off + i];
      }
      continue;
    }
    const double m = static_cast<double>(count);
    for (std::size_t n = 0; n < dy.n(); ++n) {
      const std::size_t off = (n * channels_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        dx[off + i] = scale * (dy[off + i] - sum_dy / m - xhat_[off + i] * sum_dy_xhat / m);
      }
    }
  }
  return dx;
}

void BatchNorm2d::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm2d::collect_buffers(std::vector<Buffer>& out) {
  out.push_back({name_ + ".running_mean", &running_mean_});
  out.push_back({name_ + ".running_var", &running_var_});
}

// --- LeakyRelu ------------------------------------------------------------

Tensor LeakyRelu::forward(const Tensor& x) {
  input_ = x;
  Tensor y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : slope_ * x[i];
  return y;
}

Tensor LeakyRelu::backward(const Tensor& dy) const {
  Tensor dx(dy.dims());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = input_[i] > 0.0 ? dy[i] : slope_ * dy[i];
  return dx;
}

}  // namespace depas::nn
