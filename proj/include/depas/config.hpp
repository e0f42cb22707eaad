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

#ifndef DEPAS_CONFIG_HPP
#define DEPAS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "depas/data.hpp"
#include "depas/metrics.hpp"
#include "depas/training.hpp"

namespace depas::cli {

struct DataSettings {
  std::string mode = "binary";  // binary | multilabel
  bool toy = true;
  std::string input_dir;  // RGB slide images when toy = false
  std::size_t toy_count = 1000;
  std::size_t patch_height = kPatchHeight;
  std::size_t patch_width = kPatchWidth;
  int air_threshold = -1;  // resolved to the scheme default after parsing
  double max_background = kMaxBackgroundFraction;
  double train_fraction = kTrainFraction;
};

struct GenerateSettings {
  std::size_t count = 1000;
  std::string checkpoint;  // empty: <out_dir>/train/final.dpas
  bool contact_sheet = true;
  std::size_t sheet_count = 64;
};

struct EvalSettings {
  std::string real_dir;       // empty: <out_dir>/data/eval
  std::string synthetic_dir;  // empty: <out_dir>/generated/masks
  // Precomputed feature CSVs; when both are set extraction is skipped.
  std::string real_features;
  std::string synthetic_features;
  std::size_t feature_dim = 64;
  std::uint64_t extractor_seed = 0;
  std::size_t kl_bins = 32;
  double kl_smoothing = 1e-10;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string manifest;  // empty: <out_dir>/data/manifest.jsonl
  DataSettings data;
  ModelConfig model;
  double noise_scale = 0.1;
  TrainConfig train;
  GenerateSettings generate;
  EvalSettings eval;

  // Cross-field checks plus propagation of shared values (seed, labels,
  // noise scale) into the library configs.
  void finalize();

  [[nodiscard]] LabelScheme scheme() const;
  [[nodiscard]] std::filesystem::path out() const { return out_dir; }
  [[nodiscard]] std::filesystem::path manifest_path() const;
  [[nodiscard]] std::filesystem::path train_dir() const { return out() / "train"; }
  [[nodiscard]] std::filesystem::path checkpoint_path() const;
  [[nodiscard]] std::filesystem::path generated_dir() const { return out() / "generated"; }
  [[nodiscard]] std::filesystem::path real_dir() const;
  [[nodiscard]] std::filesystem::path synthetic_dir() const;
  [[nodiscard]] std::filesystem::path eval_dir() const { return out() / "eval"; }
};

struct KeyInfo {
  std::string key;  // section.name
  std::string default_value;
  std::string help;
};

// Every accepted key in declaration order, with its default rendered as TOML.
[[nodiscard]] const std::vector<KeyInfo>& config_keys();
[[nodiscard]] std::string config_help();

// Parses TOML text. Unknown sections or keys and type mismatches raise
// ConfigError naming the offending key.
[[nodiscard]] RunConfig parse_config(const std::string& toml_text, const std::string& origin = "<config>");
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

// Applies "section.key=value"; the value is read as a TOML value and falls
// back to a bare string.
void apply_override(RunConfig& config, const std::string& assignment);

// Fully resolved configuration rendered as TOML.
[[nodiscard]] std::string to_toml(const RunConfig& config);

}  // namespace depas::cli

#endif  // DEPAS_CONFIG_HPP
