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

#ifndef DEPAS_CLI_HPP
#define DEPAS_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "depas/config.hpp"
#include "depas/metrics.hpp"

namespace depas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

struct PreprocessSummary {
  std::size_t patches = 0;
  std::size_t kept = 0;
  std::size_t filtered = 0;
  std::size_t train = 0;
  std::size_t eval = 0;
  std::vector<std::string> unreadable;
  std::filesystem::path manifest;
};

struct GenerateSummary {
  std::vector<std::filesystem::path> masks;
  std::optional<std::filesystem::path> contact_sheet;
};

struct EvalSummary {
  metrics::MetricReport report;
  std::filesystem::path json_path;
  std::filesystem::path csv_path;
};

// Builds label masks from the toy generator or from RGB images, filters
// background-dominated patches, splits train/eval and writes a manifest.
PreprocessSummary cmd_preprocess(const RunConfig& config, std::ostream& log);
// Trains on the manifest's train split; `resume` continues from the most
// advanced checkpoint in the train directory.
TrainResult cmd_train(const RunConfig& config, bool resume, std::ostream& log);
GenerateSummary cmd_generate(const RunConfig& config, std::ostream& log);
EvalSummary cmd_eval(const RunConfig& config, std::ostream& log);

// Reads every PNG label mask in `dir` (sorted by name). Throws on a missing
// or empty directory and on shape disagreement.
[[nodiscard]] std::vector<LabelMask> read_mask_dir(const std::filesystem::path& dir);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace depas::cli

#endif  // DEPAS_CLI_HPP
