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

#include "depas/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "depas/errors.hpp"

namespace depas {

namespace {

constexpr Rgb kTissueColor{200, 80, 120};
constexpr Rgb kAirColor{255, 255, 255};

std::mt19937_64 item_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// Signed shape score; positive inside an ellipse or band, 1 at its core.
struct Ellipse {
  double cx, cy, a, b, cos_t, sin_t;
  [[nodiscard]] double score(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = (dx * cos_t + dy * sin_t) / a;
    const double v = (-dx * sin_t + dy * cos_t) / b;
    return 1.0 - (u * u + v * v);
  }
};

struct Band {
  double cos_t, sin_t, cx, cy, offset, amplitude, frequency, phase, half_width;
  [[nodiscard]] double score(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = dx * cos_t + dy * sin_t;
    const double v = -dx * sin_t + dy * cos_t;
    const double d = (v - offset - amplitude * std::sin(frequency * u + phase)) / half_width;
    return 1.0 - d * d;
  }
};

LabelMask toy_binary_mask(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double H = static_cast<double>(h);
  const double W = static_cast<double>(w);
  const double air_fraction = 0.2 + 0.6 * unit(rng);

  std::vector<Ellipse> ellipses(2 + rng() % 5);
  for (auto& e : ellipses) {
    const double t = std::numbers::pi * unit(rng);
    e = {W * unit(rng), H * unit(rng), H * (0.15 + 0.45 * unit(rng)), H * (0.1 + 0.3 * unit(rng)), std::cos(t),
         std::sin(t)};
  }
  std::vector<Band> bands(rng() % 3);
  for (auto& b : bands) {
    const double t = std::numbers::pi * unit(rng);
    b = {std::cos(t),
         std::sin(t),
         W / 2,
         H / 2,
         H * (unit(rng) - 0.5),
         H * (0.05 + 0.15 * unit(rng)),
         2.0 * std::numbers::pi * (1.0 + 2.0 * unit(rng)) / W,
         2.0 * std::numbers::pi * unit(rng),
         H * (0.05 + 0.1 * unit(rng))};
  }

  const std::size_t n = h * w;
  std::vector<double> score(n);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      const double py = static_cast<double>(y) + 0.5;
      double s = -1e300;
      for (const auto& e : ellipses) s = std::max(s, e.score(px, py));
      for (const auto& b : bands) s = std::max(s, b.score(px, py));
      score[y * w + x] = s;
    }
  }
  // Lowest-scoring pixels become air; ties resolve by pixel index.
  auto air_count = static_cast<std::size_t>(std::lround(air_fraction * static_cast<double>(n)));
  air_count = std::clamp<std::size_t>(air_count, 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) { return score[a] < score[b] || (score[a] == score[b] && a < b); };
  std::nth_element(order.begin(), order.begin() + static_cast<long>(air_count), order.end(), less);
  LabelMask mask(h, w, kTissue);
  for (std::size_t i = 0; i < air_count; ++i) mask.labels[order[i]] = kAir;
  return mask;
}

}  // namespace

LabelScheme LabelScheme::binary(int air_threshold) {
  return LabelScheme{MaskMode::kBinary, {"tissue", "air"}, {kTissueColor, kAirColor}, air_threshold};
}

LabelScheme LabelScheme::multilabel(int air_threshold) {
  return LabelScheme{MaskMode::kMultilabel,
                     {"other_tissue", "air", "cells", "inflammation", "pdl1_neg", "pdl1_pos"},
                     {kTissueColor, kAirColor, {120, 70, 30}, {60, 120, 220}, {80, 180, 80}, {230, 160, 30}},
                     air_threshold};
}

std::vector<RgbImage> extract_patches(const RgbImage& image, std::size_t patch_h, std::size_t patch_w) {
  if (patch_h == 0 || patch_w == 0) throw InvalidArgument("extract_patches: patch dims must be positive");
  std::vector<RgbImage> out;
  const std::size_t rows = image.height / patch_h;
  const std::size_t cols = image.width / patch_w;
  out.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      RgbImage patch(patch_h, patch_w);
      for (std::size_t y = 0; y < patch_h; ++y) {
        const auto* src = image.pixels.data() + ((r * patch_h + y) * image.width + c * patch_w) * 3;
        std::copy(src, src + patch_w * 3, patch.pixels.data() + y * patch_w * 3);
      }
      out.push_back(std::move(patch));
    }
  }
  return out;
}

std::uint8_t luma(Rgb c) {
  const double y = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
  return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

GrayImage to_grayscale(const RgbImage& image) {
  GrayImage g{image.height, image.width, std::vector<std::uint8_t>(image.height * image.width)};
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = luma(image.at(i));
  return g;
}

LabelMask binary_mask(const GrayImage& gray, int air_threshold) {
  LabelMask m(gray.height, gray.width);
  for (std::size_t i = 0; i < gray.values.size(); ++i) m.labels[i] = gray.values[i] > air_threshold ? kAir : kTissue;
  return m;
}

BackgroundDecision background_fraction(const LabelMask& mask, double max_fraction) {
  if (mask.pixels() == 0) return {0.0, false};
  const auto air = std::count(mask.labels.begin(), mask.labels.end(), kAir);
  const double f = static_cast<double>(air) / static_cast<double>(mask.pixels());
  return {f, f > max_fraction};
}

bool is_cell_pixel(Rgb c) { return c.g < 200 && c.b < 200 && c.r > c.g && c.r > c.b; }

std::vector<std::uint8_t> cells_mask(const RgbImage& image) {
  std::vector<std::uint8_t> out(image.height * image.width);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = is_cell_pixel(image.at(i)) ? 1 : 0;
  return out;
}

LabelMask compose_multilabel(const std::vector<std::uint8_t>& annotation, const RgbImage& image,
                             const LabelScheme& scheme) {
  if (scheme.mode != MaskMode::kMultilabel) throw InvalidArgument("compose_multilabel: scheme is not multilabel");
  if (annotation.size() != image.height * image.width) {
    throw InvalidInput("compose_multilabel: annotation does not match patch dimensions");
  }
  LabelMask m(image.height, image.width);
  for (std::size_t i = 0; i < annotation.size(); ++i) {
    const Rgb c = image.at(i);
    std::uint8_t label = kTissue;
    switch (static_cast<Annotation>(annotation[i])) {
      case Annotation::kNone: label = kTissue; break;
      case Annotation::kInflammation: label = kInflammation; break;
      case Annotation::kPdl1Negative: label = kPdl1Negative; break;
      case Annotation::kPdl1Positive: label = kPdl1Positive; break;
      default:
        throw InvalidInput("compose_multilabel: unknown annotation value " + std::to_string(annotation[i]) +
                           " at pixel " + std::to_string(i));
    }
    if (luma(c) > scheme.air_threshold) {
      label = kAir;
    } else if (is_cell_pixel(c)) {
      label = kCells;
    }
    m.labels[i] = label;
  }
  return m;
}

std::vector<const ManifestItem*> DatasetManifest::split(const std::string& tag) const {
  std::vector<const ManifestItem*> out;
  for (const auto& item : items) {
    if (item.split == tag) out.push_back(&item);
  }
  return out;
}

DatasetManifest split_dataset(std::vector<ManifestItem> items, std::uint64_t seed, double train_fraction) {
  if (items.size() < 2) throw InvalidInput("split_dataset: need at least two items");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("split_dataset: fraction outside (0,1)");
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(items.size())));
  for (std::size_t i = 0; i < items.size(); ++i) items[i].split = i < n_train ? "train" : "eval";
  return DatasetManifest{std::move(items), train_fraction, seed};
}

std::vector<LabelMask> generate_toy_corpus(std::uint64_t seed, std::size_t count, std::size_t height,
                                           std::size_t width) {
  if (height < 16 || width < 16) throw InvalidArgument("generate_toy_corpus: masks must be at least 16x16");
  std::vector<LabelMask> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = item_rng(seed, i, 0);
    out.push_back(toy_binary_mask(rng, height, width));
  }
  return out;
}

ToyMultilabelSample generate_toy_multilabel_sample(std::uint64_t seed, std::size_t index, std::size_t height,
                                                   std::size_t width) {
  if (height < 16 || width < 16) throw InvalidArgument("generate_toy_multilabel_sample: masks must be at least 16x16");
  auto rng = item_rng(seed, index, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const LabelMask base = toy_binary_mask(rng, height, width);
  const double H = static_cast<double>(height);
  const double W = static_cast<double>(width);

  ToyMultilabelSample s;
  s.annotation.assign(height * width, static_cast<std::uint8_t>(Annotation::kNone));
  const std::size_t regions = 1 + rng() % 3;
  for (std::size_t r = 0; r < regions; ++r) {
    const double t = std::numbers::pi * unit(rng);
    const Ellipse e{W * unit(rng), H * unit(rng), H * (0.1 + 0.3 * unit(rng)), H * (0.1 + 0.2 * unit(rng)),
                    std::cos(t), std::sin(t)};
    const auto code = static_cast<std::uint8_t>(1 + rng() % 3);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        if (e.score(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5) > 0.0) {
          s.annotation[y * width + x] = code;
        }
      }
    }
  }

  constexpr std::array<Rgb, 4> kRegionStain{{{140, 150, 190}, {120, 120, 170}, {150, 160, 205}, {160, 165, 150}}};
  s.image = RgbImage(height, width, Rgb{245, 245, 245});
  for (std::size_t i = 0; i < base.pixels(); ++i) {
    if (base.labels[i] == kTissue) s.image.set(i, kRegionStain[s.annotation[i]]);
  }
  // Clusters of brown cell dots inside tissue.
  const std::size_t clusters = 2 + rng() % 4;
  for (std::size_t k = 0; k < clusters; ++k) {
    const double cx = W * unit(rng);
    const double cy = H * unit(rng);
    const double spread = H * (0.05 + 0.1 * unit(rng));
    std::normal_distribution<double> jitter(0.0, spread);
    const std::size_t dots = 10 + rng() % 30;
    for (std::size_t d = 0; d < dots; ++d) {
      const long px = std::lround(cx + jitter(rng));
      const long py = std::lround(cy + jitter(rng));
      for (long dy = 0; dy < 2; ++dy) {
        for (long dx = 0; dx < 2; ++dx) {
          const long x = px + dx;
          const long y = py + dy;
          if (x < 0 || y < 0 || x >= static_cast<long>(width) || y >= static_cast<long>(height)) continue;
          const auto i = static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
          if (base.labels[i] == kTissue) s.image.set(i, Rgb{150, 100, 90});
        }
      }
    }
  }
  s.mask = compose_multilabel(s.annotation, s.image, LabelScheme::multilabel(kIhcAirThreshold));
  return s;
}

std::vector<LabelMask> generate_toy_multilabel_corpus(std::uint64_t seed, std::size_t count, std::size_t height,
                                                      std::size_t width) {
  std::vector<LabelMask> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_toy_multilabel_sample(seed, i, height, width).mask);
  return out;
}

RgbImage render_binary_mask(const LabelMask& mask) {
  RgbImage img(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.pixels(); ++i) {
    const std::uint8_t v = mask.labels[i] == kAir ? 255 : 0;
    img.set(i, Rgb{v, v, v});
  }
  return img;
}

RgbImage colorize(const LabelMask& mask, const LabelScheme& scheme) {
  RgbImage img(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.pixels(); ++i) {
    const auto label = mask.labels[i];
    if (label >= scheme.colors.size()) throw InvalidInput("colorize: label outside scheme");
    img.set(i, scheme.colors[label]);
  }
  return img;
}

}  // namespace depas
