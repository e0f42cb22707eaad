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

#include "depas/training.hpp"

#include <openssl/evp.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "depas/errors.hpp"
#include "depas/io.hpp"
#include "depas/metrics.hpp"

namespace depas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

nn::Rng derived_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return nn::Rng(seq);
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint32_t stream) { return derived_rng(seed, stream)(); }

json to_json(const GeneratorConfig& g) {
  return {{"latent_dim", g.latent_dim},       {"num_blocks", g.num_blocks},
          {"base_channels", g.base_channels}, {"output_height", g.output_height},
          {"output_width", g.output_width},   {"num_labels", g.num_labels},
          {"noise_scales", g.noise_scales}};
}

GeneratorConfig generator_from_json(const json& j) {
  GeneratorConfig g;
  g.latent_dim = j.at("latent_dim");
  g.num_blocks = j.at("num_blocks");
  g.base_channels = j.at("base_channels");
  g.output_height = j.at("output_height");
  g.output_width = j.at("output_width");
  g.num_labels = j.at("num_labels");
  g.noise_scales = j.at("noise_scales").get<std::vector<double>>();
  return g;
}

json to_json(const DiscriminatorConfig& d) {
  return {{"base_channels", d.base_channels}, {"max_channels", d.max_channels}, {"min_height", d.min_height}};
}

DiscriminatorConfig discriminator_from_json(const json& j) {
  return DiscriminatorConfig{j.at("base_channels"), j.at("max_channels"), j.at("min_height")};
}

json to_json(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"learning_rate", t.adam.learning_rate},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"adam_epsilon", t.adam.epsilon},
          {"delta_step", t.anneal.delta_step},
          {"temp_divisor", t.anneal.temp_divisor},
          {"interval_epochs", t.anneal.interval_epochs},
          {"seed", t.seed},
          {"checkpoint_every", t.checkpoint_every},
          {"max_steps", t.max_steps},
          {"alphas", t.alphas},
          {"discreteness_eps", t.discreteness_eps},
          {"monitor_samples", t.monitor_samples}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.batch_size = j.at("batch_size");
  t.epochs = j.at("epochs");
  t.adam = AdamHyper{j.at("learning_rate"), j.at("beta1"), j.at("beta2"), j.at("adam_epsilon")};
  t.anneal = AnnealConfig{j.at("delta_step"), j.at("temp_divisor"), j.at("interval_epochs")};
  t.seed = j.at("seed");
  t.checkpoint_every = j.at("checkpoint_every");
  t.max_steps = j.at("max_steps");
  t.alphas = j.at("alphas").get<std::array<double, kNumScales>>();
  t.discreteness_eps = j.at("discreteness_eps");
  t.monitor_samples = j.at("monitor_samples");
  return t;
}

// Little-endian binary writer/reader for the checkpoint container.
class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const std::string& s) { buf_ += s; }
  [[nodiscard]] const std::string& str() const { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string origin) : buf_(std::move(data)), origin_(std::move(origin)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw IoError(origin_ + ": truncated checkpoint");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string buf_;
  std::string origin_;
  std::size_t pos_ = 0;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

}  // namespace

// --- Adam -----------------------------------------------------------------

void AdamHyper::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < beta2 && beta2 < 1.0)) throw ConfigError("Adam betas must satisfy 0 < beta1 < beta2 < 1");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

void adam_step(nn::Parameter& param, AdamMoments& moments, std::int64_t step, const AdamHyper& hyper) {
  if (step < 1) throw TrainingError("adam_step: step counter must start at 1");
  if (!moments.m.same_shape(param.value)) {
    moments.m = Tensor(param.value.dims());
    moments.v = Tensor(param.value.dims());
  }
  for (std::size_t i = 0; i < param.grad.size(); ++i) {
    if (!std::isfinite(param.grad[i])) {
      throw TrainingError("non-finite gradient in " + param.name + "[" + std::to_string(i) + "] at step " +
                          std::to_string(step));
    }
  }
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    const double g = param.grad[i];
    const double m = hyper.beta1 * moments.m[i] + (1.0 - hyper.beta1) * g;
    const double v = hyper.beta2 * moments.v[i] + (1.0 - hyper.beta2) * g * g;
    moments.m[i] = m;
    moments.v[i] = v;
    param.value[i] -= hyper.learning_rate * (m / c1) / (std::sqrt(v / c2) + hyper.epsilon);
  }
}

Adam::Adam(const std::vector<nn::Parameter*>& params, const AdamHyper& hyper) : hyper_(hyper) {
  hyper_.validate();
  moments_.reserve(params.size());
  for (const auto* p : params) moments_.push_back(AdamMoments{Tensor(p->value.dims()), Tensor(p->value.dims())});
}

void Adam::step(const std::vector<nn::Parameter*>& params) {
  if (params.size() != moments_.size()) throw TrainingError("Adam: parameter list changed size");
  ++steps_;
  for (std::size_t i = 0; i < params.size(); ++i) adam_step(*params[i], moments_[i], steps_, hyper_);
}

// --- configuration --------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  adam.validate();
  anneal.validate();
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  for (double a : alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("alphas must be non-negative");
  }
  if (!(discreteness_eps > 0.0 && discreteness_eps < 0.5)) throw ConfigError("discreteness_eps must lie in (0, 0.5)");
  if (monitor_samples == 0) throw ConfigError("monitor_samples must be positive");
}

std::string EpochRecord::to_json_line() const {
  json j{{"epoch", epoch},
         {"steps", steps},
         {"delta", delta},
         {"temperature", temperature},
         {"d_objective", mean_losses.d_objective},
         {"g_nonsaturating", mean_losses.g_nonsaturating},
         {"g_minimax", mean_losses.g_minimax},
         {"discreteness", discreteness},
         {"wall_time_s", wall_time_s}};
  return j.dump();
}

// --- Trainer --------------------------------------------------------------

Trainer::Trainer(const ModelConfig& model, const TrainConfig& train)
    : model_(model),
      train_(train),
      generator_(model.generator),
      bank_(model.discriminator, model.generator.num_labels, model.generator.output_height,
            model.generator.output_width),
      rng_(derived_rng(train.seed, 3)) {
  train_.validate();
  generator_.initialize(derived_seed(train_.seed, 1));
  bank_.initialize(derived_seed(train_.seed, 2));
  bank_.alphas = train_.alphas;
  opt_g_ = Adam(generator_.parameters(), train_.adam);
  opt_d_ = Adam(bank_.parameters(), train_.adam);
  set_epoch(0);
}

void Trainer::set_epoch(int epoch) {
  epoch_ = epoch;
  anneal_ = AnnealState::at(epoch, train_.anneal);
}

void Trainer::check_finite(const StepLosses& losses) const {
  for (std::size_t r = 0; r < kNumScales; ++r) {
    if (!std::isfinite(losses.d_objective[r]) || !std::isfinite(losses.g_nonsaturating[r]) ||
        !std::isfinite(losses.g_minimax[r])) {
      std::ostringstream os;
      os << "non-finite loss at step " << step_ << " (epoch " << epoch_ << ", delta " << anneal_.delta << ", T "
         << anneal_.temperature << ") scale " << r << ": d=" << losses.d_objective[r]
         << " g=" << losses.g_nonsaturating[r];
      throw TrainingError(os.str());
    }
  }
}

StepLosses Trainer::train_step(const Tensor& real) {
  const auto& gc = model_.generator;
  if (real.c() != gc.num_labels || real.h() != gc.output_height || real.w() != gc.output_width || real.n() == 0) {
    throw InvalidInput("train_step: real batch " + real.shape_string() + " does not match generator output");
  }
  const std::size_t n = real.n();
  const double inv_n = 1.0 / static_cast<double>(n);
  StepLosses losses;

  // Discriminator: minimise -sum_r alpha_r [log D_r(x) + log(1 - D_r(G(z)))].
  {
    const auto latents = sample_latent_batch(rng_, gc, n);
    const Tensor fake = generator_.forward(latents, anneal_, true);
    bank_.zero_grad();
    for (std::size_t r = 0; r < kNumScales; ++r) {
      auto& d = bank_.members[r];
      const double alpha = bank_.alphas[r];
      const auto p_real = d.forward(downsample_mask(real, kScaleWindows[r]), true);
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) {
        const bool clamped = p_real[i] < kProbabilityEpsilon || p_real[i] > 1.0 - kProbabilityEpsilon;
        g[i] = clamped ? 0.0 : -alpha * inv_n / p_real[i];
      }
      (void)d.backward(g);
      const auto p_fake = d.forward(downsample_mask(fake, kScaleWindows[r]), true);
      for (std::size_t i = 0; i < n; ++i) {
        const bool clamped = p_fake[i] < kProbabilityEpsilon || p_fake[i] > 1.0 - kProbabilityEpsilon;
        g[i] = clamped ? 0.0 : alpha * inv_n / (1.0 - p_fake[i]);
      }
      (void)d.backward(g);
      losses.d_objective[r] = gan_loss_at_scale(p_real, p_fake);
    }
    opt_d_.step(bank_.parameters());
  }

  // Generator: minimise -sum_r alpha_r log D_r(G(z)) on a fresh latent batch.
  {
    const auto latents = sample_latent_batch(rng_, gc, n);
    const Tensor fake = generator_.forward(latents, anneal_, true);
    generator_.zero_grad();
    Tensor d_fake(fake.dims());
    for (std::size_t r = 0; r < kNumScales; ++r) {
      auto& d = bank_.members[r];
      const double alpha = bank_.alphas[r];
      const auto p = d.forward(downsample_mask(fake, kScaleWindows[r]), true);
      std::vector<double> g(n);
      double nonsat = 0.0;
      double minimax = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double pc = clamp_probability(p[i]);
        nonsat += std::log(pc);
        minimax += std::log(1.0 - pc);
        const bool clamped = p[i] < kProbabilityEpsilon || p[i] > 1.0 - kProbabilityEpsilon;
        g[i] = clamped ? 0.0 : -alpha * inv_n / p[i];
      }
      losses.g_nonsaturating[r] = nonsat * inv_n;
      losses.g_minimax[r] = minimax * inv_n;
      if (alpha == 0.0) continue;
      const Tensor dx = downsample_mask_backward(d.backward(g), kScaleWindows[r]);
      for (std::size_t i = 0; i < d_fake.size(); ++i) d_fake[i] += dx[i];
    }
    generator_.backward(d_fake);
    opt_g_.step(generator_.parameters());
  }

  ++step_;
  check_finite(losses);
  if (observer_) observer_(step_, losses);
  return losses;
}

EpochRecord Trainer::run_epoch(const std::vector<LabelMask>& train_set) {
  if (train_set.empty()) throw InvalidInput("run_epoch: empty training set");
  const auto start = std::chrono::steady_clock::now();
  set_epoch(epoch_);
  EpochRecord rec;
  rec.epoch = epoch_;
  rec.delta = anneal_.delta;
  rec.temperature = anneal_.temperature;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);
  const std::size_t batch = std::min(train_.batch_size, train_set.size());
  const std::size_t batches = train_set.size() / batch;
  std::int64_t done = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    if (train_.max_steps > 0 && step_ >= train_.max_steps) break;
    std::vector<const LabelMask*> masks;
    masks.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) masks.push_back(&train_set[order[b * batch + i]]);
    const Tensor real = masks_to_tensor(masks, model_.generator.mode(), model_.generator.num_labels);
    const StepLosses l = train_step(real);
    for (std::size_t r = 0; r < kNumScales; ++r) {
      rec.mean_losses.d_objective[r] += l.d_objective[r];
      rec.mean_losses.g_nonsaturating[r] += l.g_nonsaturating[r];
      rec.mean_losses.g_minimax[r] += l.g_minimax[r];
    }
    ++done;
  }
  if (done > 0) {
    for (std::size_t r = 0; r < kNumScales; ++r) {
      rec.mean_losses.d_objective[r] /= static_cast<double>(done);
      rec.mean_losses.g_nonsaturating[r] /= static_cast<double>(done);
      rec.mean_losses.g_minimax[r] /= static_cast<double>(done);
    }
  }
  rec.steps = step_;
  rec.discreteness = monitor_discreteness();
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  set_epoch(epoch_ + 1);
  return rec;
}

TrainResult Trainer::train(const std::vector<LabelMask>& train_set, const TrainRunOptions& options) {
  TrainResult result;
  std::ofstream log;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    log.open(options.out_dir / "run_log.jsonl", std::ios::app);
    if (!log) throw IoError("cannot open run log in " + options.out_dir.string());
  }
  while (epoch_ < train_.epochs && !(train_.max_steps > 0 && step_ >= train_.max_steps)) {
    EpochRecord rec;
    try {
      rec = run_epoch(train_set);
    } catch (const TrainingError&) {
      if (!options.out_dir.empty()) save_checkpoint(options.out_dir / "diagnostic.dpas");
      throw;
    }
    result.epochs.push_back(rec);
    if (log) {
      log << rec.to_json_line() << "\n";
      log.flush();
    }
    if (options.on_epoch) options.on_epoch(rec);
    if (!options.out_dir.empty() && train_.checkpoint_every > 0 && epoch_ % train_.checkpoint_every == 0) {
      std::ostringstream name;
      name << "checkpoint_epoch" << std::setw(4) << std::setfill('0') << epoch_ << ".dpas";
      save_checkpoint(options.out_dir / name.str());
    }
  }
  if (!options.out_dir.empty()) {
    const fs::path final_path = options.out_dir / "final.dpas";
    save_checkpoint(final_path);
    result.final_checkpoint = final_path;
  }
  return result;
}

std::vector<SoftMask> Trainer::sample(std::size_t count, nn::Rng& rng) {
  std::vector<SoftMask> out;
  out.reserve(count);
  constexpr std::size_t kChunk = 16;
  for (std::size_t start = 0; start < count; start += kChunk) {
    const auto latents = sample_latent_batch(rng, model_.generator, std::min(kChunk, count - start));
    const Tensor t = generator_.forward(latents, anneal_, false);
    for (std::size_t i = 0; i < t.n(); ++i) out.push_back(SoftMask::from_batch(t, i));
  }
  return out;
}

double Trainer::monitor_discreteness() {
  nn::Rng rng = derived_rng(train_.seed, 4);
  const auto masks = sample(train_.monitor_samples, rng);
  double s = 0.0;
  for (const auto& m : masks) s += metrics::discreteness_score(m, train_.discreteness_eps);
  return s / static_cast<double>(masks.size());
}

// --- checkpoints ----------------------------------------------------------
//
// Layout: "DPAS" | u32 version | u64 meta length | meta JSON | u32 tensor count
// | per tensor: u32 name length | name | u32 rank (4) | 4 x u64 dims | f64 data.

void Trainer::save_checkpoint(const fs::path& path) {
  std::vector<NamedTensor> tensors;
  for (auto* p : generator_.parameters()) tensors.push_back({p->name, &p->value});
  for (const auto& b : generator_.buffers()) tensors.push_back({b.name, b.tensor});
  for (auto* p : bank_.parameters()) tensors.push_back({p->name, &p->value});
  for (const auto& b : bank_.buffers()) tensors.push_back({b.name, b.tensor});
  {
    auto params = generator_.parameters();
    auto& mom = opt_g_.moments();
    for (std::size_t i = 0; i < params.size(); ++i) {
      tensors.push_back({"adam_g.m." + params[i]->name, &mom[i].m});
      tensors.push_back({"adam_g.v." + params[i]->name, &mom[i].v});
    }
  }
  {
    auto params = bank_.parameters();
    auto& mom = opt_d_.moments();
    for (std::size_t i = 0; i < params.size(); ++i) {
      tensors.push_back({"adam_d.m." + params[i]->name, &mom[i].m});
      tensors.push_back({"adam_d.v." + params[i]->name, &mom[i].v});
    }
  }
  std::ostringstream rng_state;
  rng_state << rng_;
  const json meta{{"generator", to_json(model_.generator)},
                  {"discriminator", to_json(model_.discriminator)},
                  {"train", to_json(train_)},
                  {"epoch", epoch_},
                  {"step", step_},
                  {"adam_g_steps", opt_g_.steps()},
                  {"adam_d_steps", opt_d_.steps()},
                  {"anneal", {{"delta", anneal_.delta}, {"temperature", anneal_.temperature}}},
                  {"rng", rng_state.str()}};
  const std::string meta_text = meta.dump();

  Writer w;
  w.bytes("DPAS");
  w.u32(kCheckpointVersion);
  w.u64(meta_text.size());
  w.bytes(meta_text);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.u32(4);
    for (auto d : t.tensor->dims()) w.u64(d);
    for (double v : t.tensor->values()) w.f64(v);
  }
  io::write_text(path, w.str());
}

Trainer Trainer::load_checkpoint(const fs::path& path) {
  Reader r(io::read_text(path), path.string());
  if (r.bytes(4) != "DPAS") throw IoError(path.string() + ": not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError(path.string() + ": checkpoint version " + std::to_string(version) + " unsupported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  }
  json meta;
  try {
    meta = json::parse(r.bytes(r.u64()));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  ModelConfig model{generator_from_json(meta.at("generator")), discriminator_from_json(meta.at("discriminator"))};
  Trainer t(model, train_from_json(meta.at("train")));

  std::vector<NamedTensor> slots;
  for (auto* p : t.generator_.parameters()) slots.push_back({p->name, &p->value});
  for (const auto& b : t.generator_.buffers()) slots.push_back({b.name, b.tensor});
  for (auto* p : t.bank_.parameters()) slots.push_back({p->name, &p->value});
  for (const auto& b : t.bank_.buffers()) slots.push_back({b.name, b.tensor});
  {
    auto params = t.generator_.parameters();
    auto& mom = t.opt_g_.moments();
    for (std::size_t i = 0; i < params.size(); ++i) {
      slots.push_back({"adam_g.m." + params[i]->name, &mom[i].m});
      slots.push_back({"adam_g.v." + params[i]->name, &mom[i].v});
    }
  }
  {
    auto params = t.bank_.parameters();
    auto& mom = t.opt_d_.moments();
    for (std::size_t i = 0; i < params.size(); ++i) {
      slots.push_back({"adam_d.m." + params[i]->name, &mom[i].m});
      slots.push_back({"adam_d.v." + params[i]->name, &mom[i].v});
    }
  }
  const std::uint32_t count = r.u32();
  if (count != slots.size()) {
    throw IoError(path.string() + ": checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                  std::to_string(slots.size()));
  }
  for (auto& slot : slots) {
    const std::string name = r.bytes(r.u32());
    if (name != slot.name) throw IoError(path.string() + ": expected tensor " + slot.name + ", found " + name);
    if (r.u32() != 4) throw IoError(path.string() + ": tensor " + name + " has unsupported rank");
    Tensor::Dims dims{};
    for (auto& d : dims) d = r.u64();
    if (dims != slot.tensor->dims()) throw IoError(path.string() + ": shape mismatch for " + name);
    for (auto& v : slot.tensor->values()) v = r.f64();
  }
  if (!r.done()) throw IoError(path.string() + ": trailing bytes after tensor table");

  t.step_ = meta.at("step");
  t.opt_g_.set_steps(meta.at("adam_g_steps"));
  t.opt_d_.set_steps(meta.at("adam_d_steps"));
  std::istringstream rng_state(meta.at("rng").get<std::string>());
  rng_state >> t.rng_;
  if (!rng_state) throw IoError(path.string() + ": corrupt RNG state");
  t.set_epoch(meta.at("epoch"));
  return t;
}

std::string file_digest(const fs::path& path) {
  const std::string data = io::read_text(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("digest failed for " + path.string());
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

}  // namespace depas
