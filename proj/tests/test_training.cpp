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
#include <fstream>

#include "depas/data.hpp"
#include "depas/errors.hpp"
#include "depas/io.hpp"
#include "depas/training.hpp"

namespace depas {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("depas_test_training_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ModelConfig tiny_model(std::size_t labels = 1) {
  ModelConfig m;
  m.generator.latent_dim = 8;
  m.generator.num_blocks = 3;
  m.generator.base_channels = 4;
  m.generator.output_height = 16;
  m.generator.output_width = 32;
  m.generator.num_labels = labels;
  m.discriminator.base_channels = 4;
  m.discriminator.max_channels = 16;
  return m;
}

TrainConfig tiny_train(std::uint64_t seed = 3) {
  TrainConfig t;
  t.batch_size = 4;
  t.epochs = 3;
  t.seed = seed;
  t.checkpoint_every = 1;
  t.monitor_samples = 4;
  t.anneal.interval_epochs = 1;
  return t;
}

// Reference Adam in long double, written from the update rule.
struct AdamOracle {
  long double m = 0, v = 0, x;
  explicit AdamOracle(double x0) : x(x0) {}
  void step(long double g, int t, const AdamHyper& h) {
    m = h.beta1 * m + (1 - h.beta1) * g;
    v = h.beta2 * v + (1 - h.beta2) * g * g;
    const long double mh = m / (1 - std::pow(static_cast<long double>(h.beta1), t));
    const long double vh = v / (1 - std::pow(static_cast<long double>(h.beta2), t));
    x -= h.learning_rate * mh / (std::sqrt(vh) + h.epsilon);
  }
};

TEST(Adam, MatchesReferenceUpdates) {
  const AdamHyper hyper;
  nn::Parameter p("w", {1, 1, 1, 3});
  p.value.values()[0] = 0.5;
  p.value.values()[1] = -1.0;
  p.value.values()[2] = 2.0;
  std::vector<AdamOracle> oracle{AdamOracle(0.5), AdamOracle(-1.0), AdamOracle(2.0)};
  AdamMoments mom;
  for (int t = 1; t <= 50; ++t) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double g = std::sin(0.3 * t + static_cast<double>(i)) * (1.0 + static_cast<double>(i));
      p.grad[i] = g;
      oracle[i].step(g, t, hyper);
    }
    adam_step(p, mom, t, hyper);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.value[i], static_cast<double>(oracle[i].x), 1e-13);
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  const AdamHyper hyper;
  nn::Parameter p("w", {1, 1, 1, 2});
  p.value.fill(1.0);
  p.grad[0] = 3.0;
  p.grad[1] = -0.01;
  AdamMoments mom;
  adam_step(p, mom, 1, hyper);
  EXPECT_NEAR(p.value[0], 1.0 - 2e-4, 1e-10);
  EXPECT_NEAR(p.value[1], 1.0 + 2e-4, 1e-9);
}

TEST(Adam, RejectsNonFiniteGradient) {
  nn::Parameter p("w", {1, 1, 1, 1});
  p.grad[0] = NAN;
  AdamMoments mom;
  EXPECT_THROW(adam_step(p, mom, 1, AdamHyper{}), TrainingError);
}

TEST(TrainConfig, Validation) {
  TrainConfig t;
  EXPECT_NO_THROW(t.validate());
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TrainConfig{};
  t.adam.beta1 = 0.9999;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TrainConfig{};
  t.alphas[1] = -1.0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Trainer, StepReportsFiniteLossesAndMovesParameters) {
  Trainer t(tiny_model(), tiny_train());
  const auto corpus = generate_toy_corpus(1, 8, 16, 32);
  const Tensor real = masks_to_tensor(std::vector<LabelMask>(corpus.begin(), corpus.begin() + 4), MaskMode::kBinary, 1);
  const Tensor before = t.generator().parameters().front()->value;
  const auto l = t.train_step(real);
  for (std::size_t r = 0; r < kNumScales; ++r) {
    EXPECT_TRUE(std::isfinite(l.d_objective[r]));
    EXPECT_LE(l.d_objective[r], 0.0);
    EXPECT_LE(l.g_nonsaturating[r], 0.0);
  }
  EXPECT_EQ(t.step(), 1);
  EXPECT_NE(before.values()[0], t.generator().parameters().front()->value.values()[0]);
  EXPECT_THROW((void)t.train_step(Tensor(4, 1, 8, 16)), InvalidInput);
}

TEST(Trainer, EpochUsesScheduleAndDropLastBatching) {
  Trainer t(tiny_model(), tiny_train());
  const auto corpus = generate_toy_corpus(1, 10, 16, 32);
  t.set_epoch(2);
  const auto rec = t.run_epoch(corpus);
  EXPECT_EQ(rec.epoch, 2);
  EXPECT_EQ(rec.delta, 3.0);
  EXPECT_NEAR(rec.temperature, 0.64, 1e-15);
  EXPECT_EQ(rec.steps, 2);  // 10 masks, batch 4
  EXPECT_EQ(t.epoch(), 3);
  EXPECT_GE(rec.discreteness, 0.0);
  EXPECT_LE(rec.discreteness, 1.0);
}

TEST(Trainer, IdenticalSeedsGiveIdenticalCheckpoints) {
  const auto corpus = generate_toy_corpus(2, 12, 16, 32);
  std::vector<std::string> digests;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = scratch("det" + std::to_string(run));
    Trainer t(tiny_model(), tiny_train());
    const auto result = t.train(corpus, {dir, {}});
    ASSERT_TRUE(result.final_checkpoint);
    digests.push_back(file_digest(*result.final_checkpoint));
    EXPECT_EQ(result.epochs.size(), 3u);
    EXPECT_TRUE(fs::exists(dir / "checkpoint_epoch0002.dpas"));
    EXPECT_EQ(io::read_text(dir / "run_log.jsonl").find("\"delta\":1.0") != std::string::npos, true);
  }
  EXPECT_EQ(digests[0], digests[1]);
  Trainer other(tiny_model(), tiny_train(4));
  const fs::path dir = scratch("det_other");
  EXPECT_NE(file_digest(*other.train(corpus, {dir, {}}).final_checkpoint), digests[0]);
}

TEST(Trainer, ResumeReproducesUninterruptedLosses) {
  const auto corpus = generate_toy_corpus(5, 16, 16, 32);
  TrainConfig cfg = tiny_train();
  cfg.epochs = 2;
  const fs::path dir = scratch("resume");

  std::vector<EpochRecord> straight;
  {
    Trainer t(tiny_model(), cfg);
    straight = t.train(corpus).epochs;
  }
  Trainer first(tiny_model(), cfg);
  (void)first.run_epoch(corpus);
  first.save_checkpoint(dir / "mid.dpas");
  Trainer resumed = Trainer::load_checkpoint(dir / "mid.dpas");
  EXPECT_EQ(resumed.epoch(), 1);
  EXPECT_EQ(resumed.step(), 4);
  const auto rec = resumed.run_epoch(corpus);
  EXPECT_EQ(rec.mean_losses.d_objective, straight[1].mean_losses.d_objective);
  EXPECT_EQ(rec.mean_losses.g_nonsaturating, straight[1].mean_losses.g_nonsaturating);

  // Step-level comparison over 12 steps from the same checkpoint.
  Trainer a = Trainer::load_checkpoint(dir / "mid.dpas");
  Trainer b = Trainer::load_checkpoint(dir / "mid.dpas");
  const Tensor real = masks_to_tensor(std::vector<LabelMask>(corpus.begin(), corpus.begin() + 4), MaskMode::kBinary, 1);
  for (int s = 0; s < 12; ++s) {
    const auto la = a.train_step(real);
    const auto lb = b.train_step(real);
    ASSERT_EQ(la.d_objective, lb.d_objective) << "step " << s;
    ASSERT_EQ(la.g_nonsaturating, lb.g_nonsaturating) << "step " << s;
  }
}

TEST(Trainer, CheckpointRoundTripPreservesGeneratorOutput) {
  const fs::path dir = scratch("roundtrip");
  Trainer t(tiny_model(6), tiny_train());
  const auto corpus = generate_toy_multilabel_corpus(1, 8, 16, 32);
  (void)t.run_epoch(corpus);
  t.save_checkpoint(dir / "c.dpas");
  Trainer back = Trainer::load_checkpoint(dir / "c.dpas");
  nn::Rng r1(5), r2(5);
  const auto a = t.sample(3, r1);
  const auto b = back.sample(3, r2);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].values, b[i].values);
  back.save_checkpoint(dir / "d.dpas");
  EXPECT_EQ(file_digest(dir / "c.dpas"), file_digest(dir / "d.dpas"));
}

TEST(Trainer, CheckpointErrors) {
  const fs::path dir = scratch("errors");
  Trainer t(tiny_model(), tiny_train());
  t.save_checkpoint(dir / "c.dpas");
  std::string bytes = io::read_text(dir / "c.dpas");
  bytes[4] = 7;  // version field
  io::write_text(dir / "v.dpas", bytes);
  try {
    (void)Trainer::load_checkpoint(dir / "v.dpas");
    FAIL() << "expected a version error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  io::write_text(dir / "m.dpas", "NOPE" + bytes.substr(4));
  EXPECT_THROW((void)Trainer::load_checkpoint(dir / "m.dpas"), IoError);
  io::write_text(dir / "t.dpas", io::read_text(dir / "c.dpas").substr(0, 200));
  EXPECT_THROW((void)Trainer::load_checkpoint(dir / "t.dpas"), IoError);
  EXPECT_THROW((void)Trainer::load_checkpoint(dir / "absent.dpas"), IoError);
}

TEST(FileDigest, KnownVector) {
  const fs::path dir = scratch("digest");
  io::write_text(dir / "abc", "abc");
  EXPECT_EQ(file_digest(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace depas
