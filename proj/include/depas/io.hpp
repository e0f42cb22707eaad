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

#ifndef DEPAS_IO_HPP
#define DEPAS_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "depas/data.hpp"
#include "depas/mask.hpp"

namespace depas::io {

// Single-channel 8-bit PNG whose pixel values are label ids.
void write_label_png(const std::filesystem::path& path, const LabelMask& mask);
[[nodiscard]] LabelMask read_label_png(const std::filesystem::path& path);

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);
// Any PNG flavour, converted to 8-bit RGB.
[[nodiscard]] RgbImage read_rgb_png(const std::filesystem::path& path);

// JSON sidecar: {"mode": ..., "air_threshold": ..., "labels": [{"id", "name", "color"}]}.
void write_scheme_sidecar(const std::filesystem::path& path, const LabelScheme& scheme);
[[nodiscard]] LabelScheme read_scheme_sidecar(const std::filesystem::path& path);

// One JSON object per line: {"index", "patch", "mask", "split", "air_fraction"}.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
[[nodiscard]] DatasetManifest read_manifest(const std::filesystem::path& path);
[[nodiscard]] std::string manifest_to_string(const DatasetManifest& manifest);

// Tiles masks into a colorized preview grid, `columns` wide, 2 px gutters.
[[nodiscard]] RgbImage contact_sheet(const std::vector<LabelMask>& masks, const LabelScheme& scheme,
                                     std::size_t columns = 8);

// Sorted *.png entries of a directory.
[[nodiscard]] std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace depas::io

#endif  // DEPAS_IO_HPP
