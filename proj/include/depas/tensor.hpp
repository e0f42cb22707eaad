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

#ifndef DEPAS_TENSOR_HPP
#define DEPAS_TENSOR_HPP

#include <array>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace depas {

// Cache-line aligned storage. Vectorized kernels choose their peeling by
// address, so a fixed alignment keeps results independent of heap layout.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

// Dense row-major NCHW array of doubles. Lower-rank data (vectors, matrices)
// uses leading singleton dimensions.
class Tensor {
 public:
  using Dims = std::array<std::size_t, 4>;

  Tensor() = default;
  Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : dims_{n, c, h, w}, data_(n * c * h * w, fill) {}
  explicit Tensor(Dims dims, double fill = 0.0)
      : Tensor(dims[0], dims[1], dims[2], dims[3], fill) {}

  [[nodiscard]] std::size_t n() const noexcept { return dims_[0]; }
  [[nodiscard]] std::size_t c() const noexcept { return dims_[1]; }
  [[nodiscard]] std::size_t h() const noexcept { return dims_[2]; }
  [[nodiscard]] std::size_t w() const noexcept { return dims_[3]; }
  [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  // Elements per sample (C*H*W) and per channel plane (H*W).
  [[nodiscard]] std::size_t sample_size() const noexcept { return dims_[1] * dims_[2] * dims_[3]; }
  [[nodiscard]] std::size_t plane_size() const noexcept { return dims_[2] * dims_[3]; }

  [[nodiscard]] double* data() noexcept { return data_.data(); }
  [[nodiscard]] const double* data() const noexcept { return data_.data(); }
  [[nodiscard]] std::span<double> values() & noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const& noexcept { return data_; }
  // Spans into a temporary would dangle.
  std::span<const double> values() && = delete;

  [[nodiscard]] std::span<double> sample(std::size_t i) & noexcept {
    return {data_.data() + i * sample_size(), sample_size()};
  }
  [[nodiscard]] std::span<const double> sample(std::size_t i) const& noexcept {
    return {data_.data() + i * sample_size(), sample_size()};
  }
  std::span<const double> sample(std::size_t i) && = delete;

  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }
  [[nodiscard]] double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  void fill(double v);
  [[nodiscard]] bool same_shape(const Tensor& other) const noexcept { return dims_ == other.dims_; }
  // Reinterprets the buffer under new dimensions with equal element count.
  void reshape(Dims dims);

  [[nodiscard]] std::string shape_string() const;

 private:
  Dims dims_{0, 0, 0, 0};
  AlignedVector data_;
};

}  // namespace depas

#endif  // DEPAS_TENSOR_HPP
