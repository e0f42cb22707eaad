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

#ifndef DEPAS_TRAINING_HPP
#define DEPAS_TRAINING_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "depas/annealing.hpp"
#include "depas/discriminator.hpp"
#include "depas/generator.hpp"
#include "depas/mask.hpp"
#include "depas/nn.hpp"

namespace depas {

struct AdamHyper {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

// One bias-corrected Adam update of `param` from its accumulated gradient.
// `step` is the 1-based update count. Throws TrainingError on non-finite
// gradients.
void adam_step(nn::Parameter& param, AdamMoments& moments, std::int64_t step, const AdamHyper& hyper);

// Moment storage for a fixed, ordered parameter list. Parameters are passed
// per step so the optimizer never holds pointers into a model.
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<nn::Parameter*>& params, const AdamHyper& hyper);

  void step(const std::vector<nn::Parameter*>& params);
  [[nodiscard]] std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t s) { steps_ = s; }
  std::vector<AdamMoments>& moments() { return moments_; }

 private:
  std::vector<AdamMoments> moments_;
  AdamHyper hyper_;
  std::int64_t steps_ = 0;
};

struct TrainConfig {
  std::size_t batch_size = 8;
  int epochs = 100;
  AdamHyper adam;
  AnnealConfig anneal;
  std::uint64_t seed = 0;
  int checkpoint_every = 10;
  // Stop after this many optimizer steps (0: run all epochs).
  std::int64_t max_steps = 0;
  std::array<double, kNumScales> alphas{1.0, 1.0, 1.0};
  double discreteness_eps = 0.1;
  std::size_t monitor_samples = 16;

  void validate() const;
};

struct ModelConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
};

// Per-scale terms from one train_step. d_objective is the discriminator's
// value of log D(x) + log(1 - D(G(z))); the generator terms come from the
// generator pass, which maximises log D(G(z)).
struct StepLosses {
  std::array<double, kNumScales> d_objective{};
  std::array<double, kNumScales> g_nonsaturating{};
  std::array<double, kNumScales> g_minimax{};
};

struct EpochRecord {
  int epoch = 0;
  std::int64_t steps = 0;
  double delta = 1.0;
  double temperature = 1.0;
  StepLosses mean_losses;
  double discreteness = 0.0;
  double wall_time_s = 0.0;

  [[nodiscard]] std::string to_json_line() const;
};

struct TrainRunOptions {
  std::filesystem::path out_dir;  // empty: no checkpoints or log
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::optional<std::filesystem::path> final_checkpoint;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Owns generator, discriminator bank, both optimizers and the RNG that
// drives latent sampling and data order.
class Trainer {
 public:
  Trainer(const ModelConfig& model, const TrainConfig& train);

  // One discriminator ascent step on fresh fakes, then one non-saturating
  // generator step on a fresh latent batch. `real` is (N, C, H, W).
  StepLosses train_step(const Tensor& real);

  // Single epoch over `train_set` in a seeded random order (drop-last batching).
  EpochRecord run_epoch(const std::vector<LabelMask>& train_set);
  // Epoch loop from the current epoch to train.epochs (or max_steps).
  TrainResult train(const std::vector<LabelMask>& train_set, const TrainRunOptions& options = {});

  // Mean discreteness of monitor_samples masks from a fixed latent set.
  double monitor_discreteness();
  // Evaluation-mode samples from a caller-owned RNG.
  std::vector<SoftMask> sample(std::size_t count, nn::Rng& rng);

  void save_checkpoint(const std::filesystem::path& path);
  [[nodiscard]] static Trainer load_checkpoint(const std::filesystem::path& path);

  Generator& generator() { return generator_; }
  DiscriminatorBank& bank() { return bank_; }
  [[nodiscard]] const ModelConfig& model_config() const { return model_; }
  [[nodiscard]] const TrainConfig& train_config() const { return train_; }
  [[nodiscard]] int epoch() const { return epoch_; }
  [[nodiscard]] std::int64_t step() const { return step_; }
  [[nodiscard]] const AnnealState& anneal() const { return anneal_; }
  void set_epoch(int epoch);
  nn::Rng& rng() { return rng_; }
  // Called after every train_step with the global step count. Not persisted.
  void set_step_observer(std::function<void(std::int64_t, const StepLosses&)> observer) {
    observer_ = std::move(observer);
  }

 private:
  void check_finite(const StepLosses& losses) const;

  ModelConfig model_;
  TrainConfig train_;
  Generator generator_;
  DiscriminatorBank bank_;
  Adam opt_g_;
  Adam opt_d_;
  nn::Rng rng_;
  AnnealState anneal_;
  int epoch_ = 0;
  std::int64_t step_ = 0;
  std::function<void(std::int64_t, const StepLosses&)> observer_;
};

// Hex SHA-256 of a file's bytes.
[[nodiscard]] std::string file_digest(const std::filesystem::path& path);

}  // namespace depas

#endif  // DEPAS_TRAINING_HPP
