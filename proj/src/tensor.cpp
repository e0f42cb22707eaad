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

#include "depas/tensor.hpp"

#include <algorithm>

#include "depas/errors.hpp"

namespace depas {

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Dims dims) {
  if (dims[0] * dims[1] * dims[2] * dims[3] != data_.size()) {
    throw InvalidInput("reshape " + shape_string() + " to incompatible element count");
  }
  dims_ = dims;
}

std::string Tensor::shape_string() const {
  return "(" + std::to_string(dims_[0]) + ", " + std::to_string(dims_[1]) + ", " +
         std::to_string(dims_[2]) + ", " + std::to_string(dims_[3]) + ")";
}

}  // namespace depas
