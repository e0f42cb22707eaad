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

#include "depas/config.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "depas/errors.hpp"
#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace depas::cli {

namespace fs = std::filesystem;

namespace {

std::string render(double v) {
  std::ostringstream os;
  os << std::setprecision(15) << v;
  std::string s = os.str();
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}
std::string render(bool v) { return v ? "true" : "false"; }
std::string render(const std::string& v) {
  std::ostringstream os;
  os << toml::value<std::string>(v);
  return os.str();
}
template <class T>
  requires std::is_integral_v<T>
std::string render(T v) {
  return std::to_string(v);
}
std::string render(const std::array<double, kNumScales>& a) {
  std::string s = "[";
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + render(a[i]);
  return s + "]";
}

[[noreturn]] void type_error(const std::string& key, const char* expected) {
  throw ConfigError("config key '" + key + "' expects " + expected);
}

void read(const std::string& key, const toml::node& node, double& out) {
  if (auto v = node.value_exact<double>()) {
    out = *v;
  } else if (auto i = node.value_exact<std::int64_t>()) {
    out = static_cast<double>(*i);
  } else {
    type_error(key, "a number");
  }
}
void read(const std::string& key, const toml::node& node, bool& out) {
  auto v = node.value_exact<bool>();
  if (!v) type_error(key, "a boolean");
  out = *v;
}
void read(const std::string& key, const toml::node& node, std::string& out) {
  auto v = node.value_exact<std::string>();
  if (!v) type_error(key, "a string");
  out = *v;
}
template <class T>
  requires std::is_integral_v<T>
void read(const std::string& key, const toml::node& node, T& out) {
  auto v = node.value_exact<std::int64_t>();
  if (!v) type_error(key, "an integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (*v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
  }
  if (*v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
      static_cast<std::uint64_t>(*v) > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
    throw ConfigError("config key '" + key + "' is out of range");
  }
  out = static_cast<T>(*v);
}
void read(const std::string& key, const toml::node& node, std::array<double, kNumScales>& out) {
  const auto* arr = node.as_array();
  if (arr == nullptr || arr->size() != kNumScales) type_error(key, "an array of 3 numbers");
  for (std::size_t i = 0; i < kNumScales; ++i) read(key, *arr->get(i), out[i]);
}

struct Binding {
  std::string key;
  std::string help;
  std::function<void(RunConfig&, const toml::node&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Access>
Binding bind(std::string key, std::string help, Access access) {
  Binding b;
  b.key = key;
  b.help = std::move(help);
  b.set = [key, access](RunConfig& c, const toml::node& n) { read(key, n, access(c)); };
  b.get = [access](const RunConfig& c) { return render(access(const_cast<RunConfig&>(c))); };
  return b;
}

#define DEPAS_KEY(key, field, help) bind(key, help, [](RunConfig& c) -> auto& { return c.field; })

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      DEPAS_KEY("run.seed", seed, "master seed for data, init, training and sampling"),
      DEPAS_KEY("run.out_dir", out_dir, "root of all outputs"),
      DEPAS_KEY("run.manifest", manifest, "dataset manifest; empty means <out_dir>/data/manifest.jsonl"),
      DEPAS_KEY("data.mode", data.mode, "binary (air/tissue) or multilabel (6 classes)"),
      DEPAS_KEY("data.toy", data.toy, "generate a procedural corpus instead of reading images"),
      DEPAS_KEY("data.input_dir", data.input_dir, "directory of RGB slide PNGs when toy = false"),
      DEPAS_KEY("data.toy_count", data.toy_count, "number of toy patches"),
      DEPAS_KEY("data.patch_height", data.patch_height, "tile height for image inputs"),
      DEPAS_KEY("data.patch_width", data.patch_width, "tile width for image inputs"),
      DEPAS_KEY("data.air_threshold", data.air_threshold, "gray level above which a pixel is air; -1 means 204 (binary) or 235 (multilabel)"),
      DEPAS_KEY("data.max_background", data.max_background, "patches with a larger air fraction are dropped"),
      DEPAS_KEY("data.train_fraction", data.train_fraction, "share of kept patches assigned to the train split"),
      DEPAS_KEY("generator.latent_dim", model.generator.latent_dim, "length of the channel-wise latent vector"),
      DEPAS_KEY("generator.num_blocks", model.generator.num_blocks, "transpose-convolution blocks"),
      DEPAS_KEY("generator.base_channels", model.generator.base_channels, "channels of the last block, doubled per earlier block"),
      DEPAS_KEY("generator.height", model.generator.output_height, "output mask height"),
      DEPAS_KEY("generator.width", model.generator.output_width, "output mask width (twice the height)"),
      DEPAS_KEY("generator.noise_scale", noise_scale, "multiplier of the spatial noise added after every block"),
      DEPAS_KEY("discriminator.base_channels", model.discriminator.base_channels, "channels of the first convolution"),
      DEPAS_KEY("discriminator.max_channels", model.discriminator.max_channels, "channel cap for deeper layers"),
      DEPAS_KEY("discriminator.min_height", model.discriminator.min_height, "stop downsampling at this height"),
      DEPAS_KEY("train.batch_size", train.batch_size, "masks per optimizer step"),
      DEPAS_KEY("train.epochs", train.epochs, "epochs to run"),
      DEPAS_KEY("train.learning_rate", train.adam.learning_rate, "Adam step size for both networks"),
      DEPAS_KEY("train.beta1", train.adam.beta1, "Adam first-moment decay"),
      DEPAS_KEY("train.beta2", train.adam.beta2, "Adam second-moment decay"),
      DEPAS_KEY("train.adam_epsilon", train.adam.epsilon, "Adam denominator offset"),
      DEPAS_KEY("train.delta_step", train.anneal.delta_step, "sigmoid slope increment per interval"),
      DEPAS_KEY("train.temp_divisor", train.anneal.temp_divisor, "softmax temperature divisor per interval"),
      DEPAS_KEY("train.interval_epochs", train.anneal.interval_epochs, "epochs between annealing updates"),
      DEPAS_KEY("train.checkpoint_every", train.checkpoint_every, "epochs between checkpoints; 0 keeps only the final one"),
      DEPAS_KEY("train.max_steps", train.max_steps, "stop after this many steps; 0 runs all epochs"),
      DEPAS_KEY("train.alphas", train.alphas, "weights of the full, half and quarter resolution discriminators"),
      DEPAS_KEY("train.discreteness_eps", train.discreteness_eps, "tolerance of the per-epoch discreteness monitor"),
      DEPAS_KEY("train.monitor_samples", train.monitor_samples, "fixed latents used by the discreteness monitor"),
      DEPAS_KEY("generate.count", generate.count, "number of masks to write"),
      DEPAS_KEY("generate.checkpoint", generate.checkpoint, "checkpoint to sample; empty means <out_dir>/train/final.dpas"),
      DEPAS_KEY("generate.contact_sheet", generate.contact_sheet, "also write a tiled preview PNG"),
      DEPAS_KEY("generate.sheet_count", generate.sheet_count, "masks shown on the preview"),
      DEPAS_KEY("eval.real_dir", eval.real_dir, "real masks; empty means <out_dir>/data/eval"),
      DEPAS_KEY("eval.synthetic_dir", eval.synthetic_dir, "synthetic masks; empty means <out_dir>/generated/masks"),
      DEPAS_KEY("eval.real_features", eval.real_features, "precomputed real feature CSV (with eval.synthetic_features skips extraction)"),
      DEPAS_KEY("eval.synthetic_features", eval.synthetic_features, "precomputed synthetic feature CSV"),
      DEPAS_KEY("eval.feature_dim", eval.feature_dim, "embedding size of the fixed-seed feature extractor"),
      DEPAS_KEY("eval.extractor_seed", eval.extractor_seed, "weight seed of the feature extractor"),
      DEPAS_KEY("eval.kl_bins", eval.kl_bins, "histogram bins per axis for KL"),
      DEPAS_KEY("eval.kl_smoothing", eval.kl_smoothing, "additive histogram smoothing for KL"),
  };
  return table;
}

#undef DEPAS_KEY

const Binding* find_binding(const std::string& key) {
  for (const auto& b : bindings()) {
    if (b.key == key) return &b;
  }
  return nullptr;
}

void apply_table(RunConfig& config, const toml::table& root, const std::string& origin) {
  for (const auto& [section, node] : root) {
    const auto* table = node.as_table();
    if (table == nullptr) throw ConfigError(origin + ": top-level key '" + std::string(section.str()) + "' must be a section");
    for (const auto& [name, value] : *table) {
      const std::string key = std::string(section.str()) + "." + std::string(name.str());
      const Binding* b = find_binding(key);
      if (b == nullptr) throw ConfigError(origin + ": unknown config key '" + key + "'");
      b->set(config, value);
    }
  }
}

}  // namespace

void RunConfig::finalize() {
  if (data.mode != "binary" && data.mode != "multilabel") {
    throw ConfigError("data.mode must be 'binary' or 'multilabel', got '" + data.mode + "'");
  }
  const bool multilabel = data.mode == "multilabel";
  if (data.air_threshold == -1) data.air_threshold = multilabel ? kIhcAirThreshold : kHeAirThreshold;
  if (data.air_threshold < 0 || data.air_threshold > 255) throw ConfigError("data.air_threshold must lie in 0..255");
  if (!(data.max_background >= 0.0 && data.max_background <= 1.0)) throw ConfigError("data.max_background must lie in [0, 1]");
  if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0)) throw ConfigError("data.train_fraction must lie in (0, 1)");
  if (!data.toy && data.input_dir.empty()) throw ConfigError("data.input_dir is required when data.toy = false");
  if (data.toy_count == 0) throw ConfigError("data.toy_count must be positive");
  if (data.patch_height == 0 || data.patch_width == 0) throw ConfigError("patch size must be positive");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw ConfigError("generator.noise_scale must be non-negative");
  if (out_dir.empty()) throw ConfigError("run.out_dir must not be empty");

  model.generator.num_labels = multilabel ? LabelScheme::multilabel().size() : 1;
  model.generator.noise_scales.assign(model.generator.num_blocks, noise_scale);
  train.seed = seed;
  model.generator.validate();
  train.validate();
  if (generate.count == 0) throw ConfigError("generate.count must be positive");
  if (eval.real_features.empty() != eval.synthetic_features.empty()) {
    throw ConfigError("eval.real_features and eval.synthetic_features must be set together");
  }
  if (eval.feature_dim == 0) throw ConfigError("eval.feature_dim must be positive");
  if (eval.kl_bins == 0) throw ConfigError("eval.kl_bins must be positive");
  if (!(eval.kl_smoothing > 0.0)) throw ConfigError("eval.kl_smoothing must be positive");
}

LabelScheme RunConfig::scheme() const {
  return data.mode == "multilabel" ? LabelScheme::multilabel(data.air_threshold)
                                   : LabelScheme::binary(data.air_threshold);
}

fs::path RunConfig::manifest_path() const { return manifest.empty() ? out() / "data" / "manifest.jsonl" : fs::path(manifest); }
fs::path RunConfig::checkpoint_path() const {
  return generate.checkpoint.empty() ? train_dir() / "final.dpas" : fs::path(generate.checkpoint);
}
fs::path RunConfig::real_dir() const { return eval.real_dir.empty() ? out() / "data" / "eval" : fs::path(eval.real_dir); }
fs::path RunConfig::synthetic_dir() const {
  return eval.synthetic_dir.empty() ? generated_dir() / "masks" : fs::path(eval.synthetic_dir);
}

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = [] {
    const RunConfig defaults;
    std::vector<KeyInfo> out;
    for (const auto& b : bindings()) out.push_back({b.key, b.get(defaults), b.help});
    return out;
  }();
  return keys;
}

std::string config_help() {
  std::ostringstream os;
  os << "Configuration keys (TOML section.key = default):\n";
  std::size_t width = 0;
  for (const auto& k : config_keys()) width = std::max(width, k.key.size() + k.default_value.size() + 3);
  for (const auto& k : config_keys()) {
    const std::string lhs = k.key + " = " + k.default_value;
    os << "  " << std::left << std::setw(static_cast<int>(width)) << lhs << "  " << k.help << "\n";
  }
  return os.str();
}

RunConfig parse_config(const std::string& toml_text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(toml_text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(os.str());
  }
  RunConfig config;
  apply_table(config, root, origin);
  return config;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  const Binding* b = find_binding(key);
  if (b == nullptr) throw ConfigError("unknown config key '" + key + "'");
  toml::table parsed;
  bool ok = true;
  try {
    parsed = toml::parse("v = " + value);
  } catch (const toml::parse_error&) {
    ok = false;
  }
  if (ok) {
    b->set(config, *parsed.get("v"));
  } else {
    b->set(config, toml::value<std::string>(value));
  }
}

std::string to_toml(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& b : bindings()) {
    const auto dot = b.key.find('.');
    const std::string s = b.key.substr(0, dot);
    if (s != section) {
      os << (section.empty() ? "" : "\n") << "[" << s << "]\n";
      section = s;
    }
    os << b.key.substr(dot + 1) << " = " << b.get(config) << "\n";
  }
  return os.str();
}

}  // namespace depas::cli
