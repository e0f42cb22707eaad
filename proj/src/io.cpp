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

#include "depas/io.hpp"

#include <png.h>

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "depas/errors.hpp"

namespace depas::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_png(const fs::path& path, const std::uint8_t* data, std::size_t h, std::size_t w, png_uint_32 format) {
  ensure_parent(path);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, data, 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + image.message);
  }
}

std::vector<std::uint8_t> read_png(const fs::path& path, png_uint_32 format, std::size_t& h, std::size_t& w,
                                   png_uint_32* source_format = nullptr) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read " + path.string() + ": " + image.message);
  }
  if (source_format) *source_format = image.format;
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode " + path.string() + ": " + image.message);
  }
  h = image.height;
  w = image.width;
  return buf;
}

}  // namespace

void write_label_png(const fs::path& path, const LabelMask& mask) {
  write_png(path, mask.labels.data(), mask.height, mask.width, PNG_FORMAT_GRAY);
}

LabelMask read_label_png(const fs::path& path) {
  std::size_t h = 0;
  std::size_t w = 0;
  png_uint_32 source = 0;
  auto buf = read_png(path, PNG_FORMAT_GRAY, h, w, &source);
  if (source & PNG_FORMAT_FLAG_COLOR) throw IoError(path.string() + ": label maps must be single-channel PNGs");
  LabelMask m(h, w);
  m.labels = std::move(buf);
  return m;
}

void write_rgb_png(const fs::path& path, const RgbImage& image) {
  write_png(path, image.pixels.data(), image.height, image.width, PNG_FORMAT_RGB);
}

RgbImage read_rgb_png(const fs::path& path) {
  std::size_t h = 0;
  std::size_t w = 0;
  auto buf = read_png(path, PNG_FORMAT_RGB, h, w);
  RgbImage img;
  img.height = h;
  img.width = w;
  img.pixels = std::move(buf);
  return img;
}

void write_scheme_sidecar(const fs::path& path, const LabelScheme& scheme) {
  json labels = json::array();
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    const Rgb c = scheme.colors.at(i);
    labels.push_back({{"id", i}, {"name", scheme.names[i]}, {"color", {c.r, c.g, c.b}}});
  }
  json j{{"mode", scheme.mode == MaskMode::kBinary ? "binary" : "multilabel"},
         {"air_threshold", scheme.air_threshold},
         {"labels", labels}};
  write_text(path, j.dump(2) + "\n");
}

LabelScheme read_scheme_sidecar(const fs::path& path) {
  try {
    const json j = json::parse(read_text(path));
    LabelScheme s;
    s.mode = j.at("mode").get<std::string>() == "binary" ? MaskMode::kBinary : MaskMode::kMultilabel;
    s.air_threshold = j.at("air_threshold").get<int>();
    for (const auto& l : j.at("labels")) {
      s.names.push_back(l.at("name").get<std::string>());
      const auto c = l.at("color");
      s.colors.push_back(Rgb{c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()});
    }
    return s;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed scheme sidecar: " + e.what());
  }
}

std::string manifest_to_string(const DatasetManifest& manifest) {
  std::ostringstream os;
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    const auto& it = manifest.items[i];
    json j{{"index", i},
           {"patch", it.patch_path},
           {"mask", it.mask_path},
           {"split", it.split},
           {"air_fraction", it.air_fraction},
           {"seed", manifest.seed},
           {"train_fraction", manifest.train_fraction}};
    os << j.dump() << "\n";
  }
  return os.str();
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  write_text(path, manifest_to_string(manifest));
}

DatasetManifest read_manifest(const fs::path& path) {
  std::istringstream is(read_text(path));
  DatasetManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      m.items.push_back(ManifestItem{j.at("patch").get<std::string>(), j.at("mask").get<std::string>(),
                                     j.at("split").get<std::string>(), j.at("air_fraction").get<double>()});
      m.seed = j.value("seed", m.seed);
      m.train_fraction = j.value("train_fraction", m.train_fraction);
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

RgbImage contact_sheet(const std::vector<LabelMask>& masks, const LabelScheme& scheme, std::size_t columns) {
  if (masks.empty()) return {};
  constexpr std::size_t kGutter = 2;
  const std::size_t h = masks.front().height;
  const std::size_t w = masks.front().width;
  columns = std::max<std::size_t>(1, std::min(columns, masks.size()));
  const std::size_t rows = (masks.size() + columns - 1) / columns;
  RgbImage sheet(rows * h + (rows + 1) * kGutter, columns * w + (columns + 1) * kGutter, Rgb{40, 40, 40});
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const RgbImage tile = colorize(masks[i], scheme);
    const std::size_t oy = kGutter + (i / columns) * (h + kGutter);
    const std::size_t ox = kGutter + (i % columns) * (w + kGutter);
    for (std::size_t y = 0; y < std::min(h, tile.height); ++y) {
      for (std::size_t x = 0; x < std::min(w, tile.width); ++x) sheet.set(oy + y, ox + x, tile.at(y, x));
    }
  }
  return sheet;
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace depas::io
