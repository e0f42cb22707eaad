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

#ifndef DEPAS_MASK_HPP
#define DEPAS_MASK_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "depas/tensor.hpp"

namespace depas {

enum class MaskMode { kBinary, kMultilabel };

// Per-pixel class probabilities, channel-major (C x H x W). Binary masks have
// one channel holding P(air).
struct SoftMask {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  SoftMask() = default;
  SoftMask(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), values(c * h * w, fill) {}

  [[nodiscard]] std::size_t pixels() const noexcept { return height * width; }
  double& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return values[(c * height + y) * width + x];
  }
  [[nodiscard]] double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return values[(c * height + y) * width + x];
  }

  // Copies sample `i` of an NCHW batch.
  static SoftMask from_batch(const Tensor& batch, std::size_t i);
};

// 2-D map of integer label ids.
struct LabelMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;

  LabelMask() = default;
  LabelMask(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), labels(h * w, fill) {}

  [[nodiscard]] std::size_t pixels() const noexcept { return height * width; }
  std::uint8_t& at(std::size_t y, std::size_t x) noexcept { return labels[y * width + x]; }
  [[nodiscard]] std::uint8_t at(std::size_t y, std::size_t x) const noexcept { return labels[y * width + x]; }

  // Count of pixels per label id in [0, num_labels); throws if a label is out of range.
  [[nodiscard]] std::vector<std::size_t> histogram(std::size_t num_labels) const;

  bool operator==(const LabelMask&) const = default;
};

// Real-valued network input for a batch of label masks. Binary: one channel
// holding the label (air = 1). Multilabel: one-hot over `num_labels` channels.
Tensor masks_to_tensor(const std::vector<const LabelMask*>& masks, MaskMode mode, std::size_t num_labels);
Tensor masks_to_tensor(const std::vector<LabelMask>& masks, MaskMode mode, std::size_t num_labels);

}  // namespace depas

#endif  // DEPAS_MASK_HPP
