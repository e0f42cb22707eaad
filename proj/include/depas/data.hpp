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

#ifndef DEPAS_DATA_HPP
#define DEPAS_DATA_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "depas/mask.hpp"

namespace depas {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB image, interleaved row-major.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w, Rgb fill = {}) : height(h), width(w), pixels(h * w * 3) {
    for (std::size_t i = 0; i < h * w; ++i) set(i, fill);
  }
  [[nodiscard]] Rgb at(std::size_t i) const { return {pixels[3 * i], pixels[3 * i + 1], pixels[3 * i + 2]}; }
  [[nodiscard]] Rgb at(std::size_t y, std::size_t x) const { return at(y * width + x); }
  void set(std::size_t i, Rgb c) {
    pixels[3 * i] = c.r;
    pixels[3 * i + 1] = c.g;
    pixels[3 * i + 2] = c.b;
  }
  void set(std::size_t y, std::size_t x, Rgb c) { set(y * width + x, c); }
  bool operator==(const RgbImage&) const = default;
};

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;
};

inline constexpr int kHeAirThreshold = 204;
inline constexpr int kIhcAirThreshold = 235;
inline constexpr double kMaxBackgroundFraction = 0.85;
inline constexpr double kTrainFraction = 0.85;
inline constexpr std::size_t kPatchHeight = 512;
inline constexpr std::size_t kPatchWidth = 1024;

// Label ids. Binary schemes use only kTissue and kAir.
enum Label : std::uint8_t {
  kTissue = 0,
  kAir = 1,
  kCells = 2,
  kInflammation = 3,
  kPdl1Negative = 4,
  kPdl1Positive = 5,
};

// Pathologist region classes for multilabel ground truth.
enum class Annotation : std::uint8_t { kNone = 0, kInflammation = 1, kPdl1Negative = 2, kPdl1Positive = 3 };

struct LabelScheme {
  MaskMode mode = MaskMode::kBinary;
  std::vector<std::string> names;
  std::vector<Rgb> colors;
  int air_threshold = kHeAirThreshold;

  [[nodiscard]] std::size_t size() const { return names.size(); }
  [[nodiscard]] static LabelScheme binary(int air_threshold = kHeAirThreshold);
  [[nodiscard]] static LabelScheme multilabel(int air_threshold = kIhcAirThreshold);
};

// Row-major non-overlapping tiles; partial tiles at the right and bottom
// borders are dropped.
[[nodiscard]] std::vector<RgbImage> extract_patches(const RgbImage& image, std::size_t patch_h = kPatchHeight,
                                                    std::size_t patch_w = kPatchWidth);

// BT.601 luma, rounded and clamped to 0..255.
[[nodiscard]] std::uint8_t luma(Rgb c);
[[nodiscard]] GrayImage to_grayscale(const RgbImage& image);

// Air (1) where gray > threshold, tissue (0) otherwise.
[[nodiscard]] LabelMask binary_mask(const GrayImage& gray, int air_threshold);

struct BackgroundDecision {
  double fraction = 0.0;
  bool filtered = false;
};
// Air fraction of a binary mask; filtered iff strictly above `max_fraction`.
[[nodiscard]] BackgroundDecision background_fraction(const LabelMask& mask,
                                                     double max_fraction = kMaxBackgroundFraction);

// Dark-brown cell pixels: G < 200, B < 200, R > G and R > B.
[[nodiscard]] bool is_cell_pixel(Rgb c);
[[nodiscard]] std::vector<std::uint8_t> cells_mask(const RgbImage& image);

// Per-pixel label with precedence air > cells > annotation > other tissue.
// `annotation` holds Annotation codes, one per pixel.
[[nodiscard]] LabelMask compose_multilabel(const std::vector<std::uint8_t>& annotation, const RgbImage& image,
                                           const LabelScheme& scheme);

struct ManifestItem {
  std::string patch_path;
  std::string mask_path;
  std::string split;
  double air_fraction = 0.0;
  bool operator==(const ManifestItem&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestItem> items;
  double train_fraction = kTrainFraction;
  std::uint64_t seed = 0;

  [[nodiscard]] std::vector<const ManifestItem*> split(const std::string& tag) const;
};

// Seeded shuffle, then the first floor(train_fraction * N) items are "train"
// and the rest "eval".
[[nodiscard]] DatasetManifest split_dataset(std::vector<ManifestItem> items, std::uint64_t seed,
                                            double train_fraction = kTrainFraction);

// Binary masks built from unions of random ellipses and wavy ridge bands;
// each mask's air fraction is drawn uniformly from [0.2, 0.8] and realised
// exactly (up to one pixel). Mask i depends only on (seed, i).
[[nodiscard]] std::vector<LabelMask> generate_toy_corpus(std::uint64_t seed, std::size_t count, std::size_t height,
                                                         std::size_t width);

struct ToyMultilabelSample {
  RgbImage image;
  std::vector<std::uint8_t> annotation;
  LabelMask mask;
};
// Renders an IHC-like RGB patch and region annotation on top of a toy binary
// mask and labels it with compose_multilabel under the IHC scheme.
[[nodiscard]] ToyMultilabelSample generate_toy_multilabel_sample(std::uint64_t seed, std::size_t index,
                                                                 std::size_t height, std::size_t width);
[[nodiscard]] std::vector<LabelMask> generate_toy_multilabel_corpus(std::uint64_t seed, std::size_t count,
                                                                    std::size_t height, std::size_t width);

// Renders a binary mask as a grayscale-valued RGB image (air 255, tissue 0).
[[nodiscard]] RgbImage render_binary_mask(const LabelMask& mask);
// Colorizes any label mask with the scheme's display colors.
[[nodiscard]] RgbImage colorize(const LabelMask& mask, const LabelScheme& scheme);

}  // namespace depas

#endif  // DEPAS_DATA_HPP
