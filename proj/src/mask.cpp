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

#include "depas/mask.hpp"

#include <algorithm>
#include <string>

#include "depas/errors.hpp"

namespace depas {

SoftMask SoftMask::from_batch(const Tensor& batch, std::size_t i) {
  SoftMask out(batch.c(), batch.h(), batch.w());
  auto src = batch.sample(i);
  std::copy(src.begin(), src.end(), out.values.begin());
  return out;
}

std::vector<std::size_t> LabelMask::histogram(std::size_t num_labels) const {
  std::vector<std::size_t> counts(num_labels, 0);
  for (auto v : labels) {
    if (v >= num_labels) {
      throw InvalidInput("label " + std::to_string(v) + " outside scheme of " + std::to_string(num_labels));
    }
    ++counts[v];
  }
  return counts;
}

Tensor masks_to_tensor(const std::vector<const LabelMask*>& masks, MaskMode mode, std::size_t num_labels) {
  if (masks.empty()) return {};
  const std::size_t h = masks.front()->height;
  const std::size_t w = masks.front()->width;
  const std::size_t channels = mode == MaskMode::kBinary ? 1 : num_labels;
  Tensor out(masks.size(), channels, h, w);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const LabelMask& m = *masks[i];
    if (m.height != h || m.width != w) {
      throw InvalidInput("mask batch with mixed dimensions");
    }
    auto dst = out.sample(i);
    for (std::size_t p = 0; p < m.pixels(); ++p) {
      const auto label = m.labels[p];
      if (mode == MaskMode::kBinary) {
        if (label > 1) throw InvalidInput("non-binary label in binary mask batch");
        dst[p] = static_cast<double>(label);
      } else {
        if (label >= num_labels) throw InvalidInput("label outside multilabel scheme");
        dst[label * m.pixels() + p] = 1.0;
      }
    }
  }
  return out;
}

Tensor masks_to_tensor(const std::vector<LabelMask>& masks, MaskMode mode, std::size_t num_labels) {
  std::vector<const LabelMask*> ptrs;
  ptrs.reserve(masks.size());
  for (const auto& m : masks) ptrs.push_back(&m);
  return masks_to_tensor(ptrs, mode, num_labels);
}

}  // namespace depas
