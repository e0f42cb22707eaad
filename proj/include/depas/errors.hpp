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

#ifndef DEPAS_ERRORS_HPP
#define DEPAS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace depas {

// Argument outside an operation's domain (non-positive slope, temperature...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data violating an operation's precondition (shapes, non-finite values).
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent model or run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure (non-PSD covariance, degenerate projection).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure inside the training loop; message carries step context.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File format or filesystem failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace depas

#endif  // DEPAS_ERRORS_HPP
