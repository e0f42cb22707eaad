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

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "depas/cli.hpp"
#include "depas/errors.hpp"
#include "depas/io.hpp"

namespace depas::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kAnnotationSuffix = ".annotation.png";

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string numbered(const std::string& prefix, std::size_t i) {
  std::ostringstream os;
  os << prefix << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

struct Candidate {
  std::string stem;
  RgbImage patch;
  LabelMask mask;
};

double air_fraction_of(const LabelMask& mask, double max_background, bool& filtered) {
  LabelMask air = mask;
  for (auto& v : air.labels) v = v == kAir ? 1 : 0;
  const auto d = background_fraction(air, max_background);
  filtered = d.filtered;
  return d.fraction;
}

LabelMask binary_from_patch(const RgbImage& patch, const LabelScheme& scheme) {
  return binary_mask(to_grayscale(patch), scheme.air_threshold);
}

std::vector<std::uint8_t> annotation_codes(const RgbImage& image) {
  std::vector<std::uint8_t> codes(image.height * image.width);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) codes[y * image.width + x] = image.at(y, x).r;
  }
  return codes;
}

std::vector<Candidate> toy_candidates(const RunConfig& config, const LabelScheme& scheme) {
  const auto& g = config.model.generator;
  std::vector<Candidate> out;
  out.reserve(config.data.toy_count);
  if (scheme.mode == MaskMode::kBinary) {
    const auto masks = generate_toy_corpus(config.seed, config.data.toy_count, g.output_height, g.output_width);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      RgbImage patch = render_binary_mask(masks[i]);
      LabelMask mask = binary_from_patch(patch, scheme);
      out.push_back({numbered("toy_", i), std::move(patch), std::move(mask)});
    }
  } else {
    for (std::size_t i = 0; i < config.data.toy_count; ++i) {
      auto s = generate_toy_multilabel_sample(config.seed, i, g.output_height, g.output_width);
      LabelMask mask = compose_multilabel(s.annotation, s.image, scheme);
      out.push_back({numbered("toy_", i), std::move(s.image), std::move(mask)});
    }
  }
  return out;
}

std::vector<Candidate> image_candidates(const RunConfig& config, const LabelScheme& scheme,
                                        std::vector<std::string>& unreadable, std::size_t& sources) {
  const fs::path dir = config.data.input_dir;
  if (!fs::is_directory(dir)) throw IoError("input directory not found: " + dir.string());
  std::vector<Candidate> out;
  for (const auto& path : io::list_pngs(dir)) {
    if (ends_with(path.filename().string(), kAnnotationSuffix)) continue;
    ++sources;
    try {
      const RgbImage image = io::read_rgb_png(path);
      const auto patches = extract_patches(image, config.data.patch_height, config.data.patch_width);
      std::vector<RgbImage> annotations;
      if (scheme.mode == MaskMode::kMultilabel) {
        const fs::path ann = dir / (path.stem().string() + kAnnotationSuffix);
        if (!fs::exists(ann)) throw IoError("missing annotation " + ann.string());
        const RgbImage a = io::read_rgb_png(ann);
        if (a.height != image.height || a.width != image.width) throw InvalidInput("annotation size differs from image");
        annotations = extract_patches(a, config.data.patch_height, config.data.patch_width);
      }
      for (std::size_t k = 0; k < patches.size(); ++k) {
        LabelMask mask = scheme.mode == MaskMode::kBinary
                             ? binary_from_patch(patches[k], scheme)
                             : compose_multilabel(annotation_codes(annotations[k]), patches[k], scheme);
        out.push_back({path.stem().string() + "_p" + std::to_string(k), patches[k], std::move(mask)});
      }
    } catch (const std::exception& e) {
      unreadable.push_back(path.string() + ": " + e.what());
    }
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p : base / p;
}

std::vector<LabelMask> load_split(const fs::path& manifest_path, const std::string& split) {
  const DatasetManifest manifest = io::read_manifest(manifest_path);
  std::vector<LabelMask> out;
  for (const auto* item : manifest.split(split)) {
    out.push_back(io::read_label_png(resolve(manifest_path.parent_path(), item->mask_path)));
  }
  return out;
}

void check_masks(const std::vector<LabelMask>& masks, const GeneratorConfig& g, const std::string& what) {
  for (const auto& m : masks) {
    if (m.height != g.output_height || m.width != g.output_width) {
      throw ConfigError(what + " masks are " + std::to_string(m.height) + "x" + std::to_string(m.width) +
                        " but the generator emits " + std::to_string(g.output_height) + "x" +
                        std::to_string(g.output_width));
    }
    const std::size_t labels = g.num_labels == 1 ? 2 : g.num_labels;
    (void)m.histogram(labels);
  }
}

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<fs::path> best;
  std::pair<int, std::int64_t> best_key{-1, -1};
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".dpas" || entry.path().filename() == "diagnostic.dpas") continue;
    try {
      const Trainer t = Trainer::load_checkpoint(entry.path());
      const std::pair<int, std::int64_t> key{t.epoch(), t.step()};
      if (key > best_key) {
        best_key = key;
        best = entry.path();
      }
    } catch (const std::exception&) {
      continue;
    }
  }
  return best;
}

double sum(const std::array<double, kNumScales>& a) { return a[0] + a[1] + a[2]; }

void print_epoch_header(std::ostream& log) {
  log << std::left << std::setw(7) << "epoch" << std::setw(8) << "steps" << std::setw(8) << "delta" << std::setw(10)
      << "temp" << std::setw(12) << "d_obj" << std::setw(12) << "g_loss" << std::setw(14) << "discreteness"
      << "seconds\n";
}

void print_epoch(std::ostream& log, const EpochRecord& r) {
  log << std::left << std::setw(7) << r.epoch << std::setw(8) << r.steps << std::setw(8) << r.delta << std::setw(10)
      << std::setprecision(4) << r.temperature << std::setw(12) << sum(r.mean_losses.d_objective) << std::setw(12)
      << -sum(r.mean_losses.g_nonsaturating) << std::setw(14) << r.discreteness << std::setprecision(3)
      << r.wall_time_s << "\n"
      << std::flush;
  log << std::setprecision(6);
}

Tensor masks_tensor(const std::vector<LabelMask>& masks, std::size_t num_labels) {
  return masks_to_tensor(masks, num_labels == 1 ? MaskMode::kBinary : MaskMode::kMultilabel, num_labels);
}

}  // namespace

std::vector<LabelMask> read_mask_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("mask directory not found: " + dir.string());
  const auto files = io::list_pngs(dir);
  if (files.empty()) throw IoError("no PNG masks in " + dir.string());
  std::vector<LabelMask> masks;
  masks.reserve(files.size());
  for (const auto& f : files) {
    masks.push_back(io::read_label_png(f));
    if (masks.back().height != masks.front().height || masks.back().width != masks.front().width) {
      throw InvalidInput("mask " + f.string() + " is " + std::to_string(masks.back().height) + "x" +
                         std::to_string(masks.back().width) + ", expected " + std::to_string(masks.front().height) +
                         "x" + std::to_string(masks.front().width));
    }
  }
  return masks;
}

PreprocessSummary cmd_preprocess(const RunConfig& config, std::ostream& log) {
  const LabelScheme scheme = config.scheme();
  PreprocessSummary summary;
  std::size_t sources = 0;
  std::vector<Candidate> candidates = config.data.toy ? toy_candidates(config, scheme)
                                                      : image_candidates(config, scheme, summary.unreadable, sources);
  for (const auto& u : summary.unreadable) log << "warning: unreadable input " << u << "\n";
  if (!config.data.toy && sources > 0 && summary.unreadable.size() == sources) {
    throw IoError("all " + std::to_string(sources) + " inputs in " + config.data.input_dir + " failed to load");
  }
  summary.patches = candidates.size();

  const fs::path manifest_path = config.manifest_path();
  const fs::path root = manifest_path.parent_path();
  for (const char* sub : {"patches", "train", "eval"}) {
    fs::remove_all(root / sub);
    fs::create_directories(root / sub);
  }

  std::vector<ManifestItem> items;
  std::map<std::string, const Candidate*> by_patch;
  for (const auto& c : candidates) {
    bool filtered = false;
    const double air = air_fraction_of(c.mask, config.data.max_background, filtered);
    if (filtered) {
      ++summary.filtered;
      continue;
    }
    ManifestItem item;
    item.patch_path = "patches/" + c.stem + ".png";
    item.air_fraction = air;
    by_patch[item.patch_path] = &c;
    items.push_back(std::move(item));
  }
  summary.kept = items.size();

  DatasetManifest manifest;
  manifest.seed = config.seed;
  manifest.train_fraction = config.data.train_fraction;
  if (!items.empty()) manifest = split_dataset(std::move(items), config.seed, config.data.train_fraction);
  for (auto& item : manifest.items) {
    const Candidate& c = *by_patch.at(item.patch_path);
    item.mask_path = item.split + "/" + c.stem + ".png";
    io::write_rgb_png(root / item.patch_path, c.patch);
    io::write_label_png(root / item.mask_path, c.mask);
    (item.split == "train" ? summary.train : summary.eval)++;
  }
  io::write_manifest(manifest_path, manifest);
  io::write_scheme_sidecar(root / "scheme.json", scheme);
  summary.manifest = manifest_path;

  log << "patches " << summary.patches << ", kept " << summary.kept << ", filtered " << summary.filtered
      << " (air fraction > " << config.data.max_background << "), unreadable " << summary.unreadable.size() << "\n";
  log << "split train " << summary.train << " / eval " << summary.eval << " -> " << manifest_path.string() << "\n";
  if (summary.kept == 0) log << "warning: no patches survived the background filter\n";
  return summary;
}

TrainResult cmd_train(const RunConfig& config, bool resume, std::ostream& log) {
  const fs::path dir = config.train_dir();
  std::optional<Trainer> trainer;
  if (resume) {
    if (auto ckpt = latest_checkpoint(dir)) {
      trainer.emplace(Trainer::load_checkpoint(*ckpt));
      log << "resuming from " << ckpt->string() << " at epoch " << trainer->epoch() << ", step " << trainer->step()
          << "\n";
    } else {
      log << "no checkpoint in " << dir.string() << ", starting fresh\n";
    }
  }
  if (!trainer) {
    fs::create_directories(dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".dpas" || entry.path().filename() == "run_log.jsonl") fs::remove(entry.path());
    }
    trainer.emplace(config.model, config.train);
  }
  const auto& g = trainer->model_config().generator;
  const std::vector<LabelMask> train_set = load_split(config.manifest_path(), "train");
  if (train_set.empty()) throw InvalidInput("manifest " + config.manifest_path().string() + " has no train items");
  check_masks(train_set, g, "training");
  io::write_text(dir / "config.toml", to_toml(config));

  log << "training on " << train_set.size() << " masks, " << trainer->train_config().epochs << " epochs\n";
  print_epoch_header(log);
  TrainRunOptions options;
  options.out_dir = dir;
  options.on_epoch = [&log](const EpochRecord& r) { print_epoch(log, r); };
  TrainResult result = trainer->train(train_set, options);
  if (result.final_checkpoint) {
    log << "final checkpoint " << result.final_checkpoint->string() << " sha256 "
        << file_digest(*result.final_checkpoint) << "\n";
  }
  return result;
}

GenerateSummary cmd_generate(const RunConfig& config, std::ostream& log) {
  const fs::path ckpt = config.checkpoint_path();
  Trainer trainer = Trainer::load_checkpoint(ckpt);
  // Sample with the annealing state of the last completed epoch.
  trainer.set_epoch(std::max(0, trainer.epoch() - 1));
  const auto& g = trainer.model_config().generator;
  const MaskMode mode = g.mode();
  const LabelScheme scheme = mode == MaskMode::kBinary ? LabelScheme::binary() : LabelScheme::multilabel();

  const fs::path out = config.generated_dir() / "masks";
  fs::remove_all(out);
  fs::create_directories(out);
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32), 5u};
  nn::Rng rng(seq);

  GenerateSummary summary;
  std::vector<LabelMask> preview;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < config.generate.count; start += kChunk) {
    const auto soft = trainer.sample(std::min(kChunk, config.generate.count - start), rng);
    for (std::size_t i = 0; i < soft.size(); ++i) {
      LabelMask m = discretize(soft[i], mode);
      const fs::path path = out / (numbered("mask_", start + i) + ".png");
      io::write_label_png(path, m);
      summary.masks.push_back(path);
      if (preview.size() < config.generate.sheet_count) preview.push_back(std::move(m));
    }
  }
  if (config.generate.contact_sheet && !preview.empty()) {
    const fs::path sheet = config.generated_dir() / "contact_sheet.png";
    io::write_rgb_png(sheet, io::contact_sheet(preview, scheme));
    summary.contact_sheet = sheet;
  }
  log << "wrote " << summary.masks.size() << " masks to " << out.string() << " from " << ckpt.string() << " (epoch "
      << trainer.epoch() << ")\n";
  return summary;
}

EvalSummary cmd_eval(const RunConfig& config, std::ostream& log) {
  metrics::FeatureExtractorSpec spec;
  spec.output_dim = config.eval.feature_dim;
  spec.seed = config.eval.extractor_seed;
  Eigen::MatrixXd real;
  Eigen::MatrixXd synthetic;
  if (!config.eval.real_features.empty()) {
    spec.kind = metrics::FeatureExtractorSpec::Kind::kExternalImport;
    real = metrics::read_feature_csv(config.eval.real_features).rows;
    synthetic = metrics::read_feature_csv(config.eval.synthetic_features).rows;
    if (real.cols() != synthetic.cols()) throw InvalidInput("feature CSVs disagree on dimension");
    spec.output_dim = static_cast<std::size_t>(real.cols());
  } else {
    const fs::path real_dir = config.real_dir();
    const fs::path synth_dir = config.synthetic_dir();
    const auto real_masks = read_mask_dir(real_dir);
    const auto synth_masks = read_mask_dir(synth_dir);
    if (real_masks.front().height != synth_masks.front().height ||
        real_masks.front().width != synth_masks.front().width) {
      throw InvalidInput("shape mismatch: " + real_dir.string() + " holds " + std::to_string(real_masks.front().height) +
                         "x" + std::to_string(real_masks.front().width) + " masks, " + synth_dir.string() + " holds " +
                         std::to_string(synth_masks.front().height) + "x" + std::to_string(synth_masks.front().width));
    }
    const std::size_t labels = config.model.generator.num_labels;
    real = metrics::extract_features(masks_tensor(real_masks, labels), spec);
    synthetic = metrics::extract_features(masks_tensor(synth_masks, labels), spec);
  }
  EvalSummary summary;
  summary.report = metrics::evaluate_features(real, synthetic, spec, config.eval.kl_bins, config.eval.kl_smoothing);

  const fs::path dir = config.eval_dir();
  fs::create_directories(dir);
  summary.json_path = dir / "report.json";
  summary.csv_path = dir / "report.csv";
  io::write_text(summary.json_path, summary.report.to_json());
  io::write_text(summary.csv_path, metrics::MetricReport::csv_header() + "\n" + summary.report.to_csv_row() + "\n");
  if (spec.kind == metrics::FeatureExtractorSpec::Kind::kFixedSeedConv) {
    metrics::write_feature_csv(dir / "real_features.csv", real, config.real_dir().string());
    metrics::write_feature_csv(dir / "synthetic_features.csv", synthetic, config.synthetic_dir().string());
  }
  log << std::setprecision(6) << "FID " << summary.report.fid << "  KS " << summary.report.ks << "  KL "
      << summary.report.kl << "  (" << summary.report.real_count << " real, " << summary.report.synthetic_count
      << " synthetic, extractor " << spec.id() << ")\n";
  return summary;
}

}  // namespace depas::cli
