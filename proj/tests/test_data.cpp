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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "depas/data.hpp"
#include "depas/errors.hpp"
#include "depas/io.hpp"

namespace depas {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("depas_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

GrayImage gray_of(std::initializer_list<std::uint8_t> v) {
  GrayImage g;
  g.height = 1;
  g.width = v.size();
  g.values = v;
  return g;
}

TEST(ExtractPatches, TilingArithmetic) {
  EXPECT_EQ(extract_patches(RgbImage(1024, 2048)).size(), 4u);
  EXPECT_TRUE(extract_patches(RgbImage(500, 1000)).empty());
  RgbImage one(512, 1024);
  one.set(7, 9, {1, 2, 3});
  const auto p = extract_patches(one);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], one);
  EXPECT_EQ(extract_patches(RgbImage(1600, 3100)).size(), 3u * 3u);
}

TEST(ExtractPatches, RowMajorOrder) {
  RgbImage img(4, 8);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 8; ++x) img.set(y, x, {static_cast<std::uint8_t>(y), static_cast<std::uint8_t>(x), 0});
  const auto p = extract_patches(img, 2, 4);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(p[1].at(0, 0), (Rgb{0, 4, 0}));
  EXPECT_EQ(p[2].at(0, 0), (Rgb{2, 0, 0}));
  EXPECT_EQ(p[3].at(1, 3), (Rgb{3, 7, 0}));
}

TEST(Grayscale, Luma) {
  EXPECT_EQ(luma({255, 255, 255}), 255);
  EXPECT_EQ(luma({0, 0, 0}), 0);
  // Oracle: round(0.299 * 100 + 0.587 * 150 + 0.114 * 50) computed exactly in integers.
  EXPECT_EQ((299 * 100 + 587 * 150 + 114 * 50 + 500) / 1000, 124);
  EXPECT_EQ(luma({100, 150, 50}), 124);
  for (int r = 0; r < 256; r += 15)
    for (int g = 0; g < 256; g += 17)
      for (int b = 0; b < 256; b += 51) {
        const long exact = std::lround(0.299 * r + 0.587 * g + 0.114 * b);
        EXPECT_EQ(luma({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)}),
                  exact);
      }
}

TEST(BinaryMask, StrictThreshold) {
  const LabelMask m = binary_mask(gray_of({210, 204, 205, 0}), kHeAirThreshold);
  EXPECT_EQ(m.labels, (std::vector<std::uint8_t>{kAir, kTissue, kAir, kTissue}));
  EXPECT_EQ(binary_mask(gray_of({100}), kIhcAirThreshold).labels[0], kTissue);
  EXPECT_EQ(binary_mask(gray_of({235, 236}), kIhcAirThreshold).labels, (std::vector<std::uint8_t>{kTissue, kAir}));
}

TEST(BackgroundFraction, StrictFilter) {
  LabelMask all(4, 5, kAir);
  auto d = background_fraction(all);
  EXPECT_EQ(d.fraction, 1.0);
  EXPECT_TRUE(d.filtered);

  LabelMask m(10, 10, kTissue);
  for (std::size_t i = 0; i < 90; ++i) m.labels[i] = kAir;
  EXPECT_TRUE(background_fraction(m).filtered);
  for (std::size_t i = 85; i < 90; ++i) m.labels[i] = kTissue;
  d = background_fraction(m);
  EXPECT_DOUBLE_EQ(d.fraction, 0.85);
  EXPECT_FALSE(d.filtered);
  m.labels[85] = kAir;
  EXPECT_TRUE(background_fraction(m).filtered);
}

TEST(CellsRule, TruthTable) {
  EXPECT_TRUE(is_cell_pixel({150, 100, 90}));
  EXPECT_FALSE(is_cell_pixel({150, 210, 90}));
  EXPECT_FALSE(is_cell_pixel({90, 100, 80}));
  EXPECT_FALSE(is_cell_pixel({150, 100, 200}));  // B not below 200
  EXPECT_FALSE(is_cell_pixel({150, 199, 150}));  // R ties B
  EXPECT_FALSE(is_cell_pixel({150, 150, 100}));  // R ties G
  EXPECT_TRUE(is_cell_pixel({255, 199, 199}));
  // Exhaustive against the literal rule on a coarse grid.
  for (int r = 0; r < 256; r += 5)
    for (int g = 0; g < 256; g += 5)
      for (int b = 0; b < 256; b += 5) {
        const bool expected = g < 200 && b < 200 && r > g && r > b;
        ASSERT_EQ(is_cell_pixel({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                 static_cast<std::uint8_t>(b)}),
                  expected);
      }
}

TEST(ComposeMultilabel, PrecedenceAndPartition) {
  const LabelScheme scheme = LabelScheme::multilabel();
  RgbImage img(1, 5);
  img.set(0, {250, 250, 250});  // air
  img.set(1, {150, 100, 90});   // cells
  img.set(2, {120, 120, 120});  // tissue
  img.set(3, {120, 120, 120});
  img.set(4, {120, 120, 120});
  const std::vector<std::uint8_t> ann{static_cast<std::uint8_t>(Annotation::kPdl1Positive),
                                      static_cast<std::uint8_t>(Annotation::kNone),
                                      static_cast<std::uint8_t>(Annotation::kInflammation),
                                      static_cast<std::uint8_t>(Annotation::kPdl1Negative),
                                      static_cast<std::uint8_t>(Annotation::kNone)};
  const LabelMask m = compose_multilabel(ann, img, scheme);
  EXPECT_EQ(m.labels, (std::vector<std::uint8_t>{kAir, kCells, kInflammation, kPdl1Negative, kTissue}));
  const auto h = m.histogram(scheme.size());
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::size_t{0}), 5u);

  auto bad = ann;
  bad[2] = 9;
  EXPECT_THROW((void)compose_multilabel(bad, img, scheme), InvalidInput);
  EXPECT_THROW((void)compose_multilabel({0, 0}, img, scheme), InvalidInput);
}

TEST(LabelScheme, Layouts) {
  const auto b = LabelScheme::binary();
  EXPECT_EQ(b.names, (std::vector<std::string>{"tissue", "air"}));
  EXPECT_EQ(b.air_threshold, 204);
  const auto m = LabelScheme::multilabel();
  ASSERT_EQ(m.size(), 6u);
  EXPECT_EQ(m.names[kAir], "air");
  EXPECT_EQ(m.air_threshold, 235);
  EXPECT_EQ(m.colors.size(), m.size());
}

std::vector<ManifestItem> items(std::size_t n) {
  std::vector<ManifestItem> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].patch_path = "p" + std::to_string(i);
  return out;
}

TEST(SplitDataset, EightyFiveFifteen) {
  const auto m = split_dataset(items(100), 5);
  EXPECT_EQ(m.split("train").size(), 85u);
  EXPECT_EQ(m.split("eval").size(), 15u);
  for (std::size_t n : {2u, 3u, 7u, 20u, 99u, 1000u}) {
    const auto s = split_dataset(items(n), 1);
    EXPECT_EQ(s.split("train").size(), static_cast<std::size_t>(std::floor(0.85 * static_cast<double>(n))));
    EXPECT_LE(std::abs(static_cast<double>(s.split("train").size()) - 0.85 * static_cast<double>(n)), 1.0);
  }
  EXPECT_THROW((void)split_dataset(items(1), 0), InvalidInput);
}

TEST(SplitDataset, DeterministicDisjointExhaustive) {
  const auto a = split_dataset(items(50), 42);
  const auto b = split_dataset(items(50), 42);
  EXPECT_EQ(io::manifest_to_string(a), io::manifest_to_string(b));
  EXPECT_NE(io::manifest_to_string(a), io::manifest_to_string(split_dataset(items(50), 43)));
  std::set<std::string> train, eval;
  for (const auto* it : a.split("train")) train.insert(it->patch_path);
  for (const auto* it : a.split("eval")) eval.insert(it->patch_path);
  EXPECT_EQ(train.size() + eval.size(), 50u);
  for (const auto& p : train) EXPECT_EQ(eval.count(p), 0u);
}

TEST(ToyCorpus, DeterministicAndBalanced) {
  const auto a = generate_toy_corpus(3, 1000, 32, 64);
  const auto b = generate_toy_corpus(3, 1000, 32, 64);
  EXPECT_EQ(a, b);
  EXPECT_NE(a[0], generate_toy_corpus(4, 1, 32, 64)[0]);
  double mean = 0.0;
  for (const auto& m : a) {
    const auto h = m.histogram(2);
    EXPECT_GT(h[0], 0u);
    EXPECT_GT(h[1], 0u);
    const double f = static_cast<double>(h[1]) / static_cast<double>(m.pixels());
    EXPECT_GE(f, 0.2 - 1.0 / 2048);
    EXPECT_LE(f, 0.8 + 1.0 / 2048);
    mean += f;
  }
  mean /= 1000.0;
  EXPECT_GE(mean, 0.45);
  EXPECT_LE(mean, 0.55);
}

TEST(ToyCorpus, MultilabelUsesSeveralClasses) {
  const auto corpus = generate_toy_multilabel_corpus(2, 20, 64, 128);
  std::vector<std::size_t> totals(6, 0);
  for (const auto& m : corpus) {
    const auto h = m.histogram(6);
    for (std::size_t c = 0; c < 6; ++c) totals[c] += h[c];
  }
  for (std::size_t c = 0; c < 6; ++c) EXPECT_GT(totals[c], 0u) << "label " << c;
}

TEST(RoundTrip, RenderedBinaryMaskIsPixelExact) {
  for (const auto& m : generate_toy_corpus(9, 20, 64, 128)) {
    const RgbImage rendered = render_binary_mask(m);
    const LabelMask once = binary_mask(to_grayscale(rendered), kHeAirThreshold);
    EXPECT_EQ(once, m);
    EXPECT_EQ(binary_mask(to_grayscale(render_binary_mask(once)), kHeAirThreshold), once);
  }
}

TEST(Io, LabelPngRoundTrip) {
  const fs::path dir = scratch("png");
  const auto m = generate_toy_multilabel_corpus(1, 1, 32, 64)[0];
  io::write_label_png(dir / "m.png", m);
  EXPECT_EQ(io::read_label_png(dir / "m.png"), m);
  const RgbImage rendered = render_binary_mask(generate_toy_corpus(1, 1, 32, 64)[0]);
  io::write_rgb_png(dir / "r.png", rendered);
  EXPECT_EQ(io::read_rgb_png(dir / "r.png"), rendered);
  EXPECT_THROW((void)io::read_label_png(dir / "missing.png"), IoError);
  EXPECT_THROW((void)io::read_label_png(dir / "r.png"), IoError);
}

TEST(Io, ManifestAndSchemeRoundTrip) {
  const fs::path dir = scratch("manifest");
  auto its = items(10);
  for (std::size_t i = 0; i < its.size(); ++i) {
    its[i].mask_path = "mask" + std::to_string(i) + ".png";
    its[i].air_fraction = 0.1 * static_cast<double>(i);
  }
  const auto m = split_dataset(its, 8);
  io::write_manifest(dir / "manifest.jsonl", m);
  const auto back = io::read_manifest(dir / "manifest.jsonl");
  EXPECT_EQ(back.items, m.items);
  EXPECT_EQ(back.seed, 8u);
  EXPECT_EQ(back.train_fraction, 0.85);

  const auto scheme = LabelScheme::multilabel();
  io::write_scheme_sidecar(dir / "scheme.json", scheme);
  const auto s = io::read_scheme_sidecar(dir / "scheme.json");
  EXPECT_EQ(s.names, scheme.names);
  EXPECT_EQ(s.colors, scheme.colors);
  EXPECT_EQ(s.air_threshold, scheme.air_threshold);
  EXPECT_EQ(s.mode, MaskMode::kMultilabel);
}

TEST(Io, ContactSheetGeometry) {
  const auto masks = generate_toy_corpus(1, 10, 16, 32);
  const RgbImage sheet = io::contact_sheet(masks, LabelScheme::binary(), 4);
  EXPECT_EQ(sheet.width, 4 * 32 + 5 * 2);
  EXPECT_EQ(sheet.height, 3 * 16 + 4 * 2);
}

}  // namespace
}  // namespace depas
