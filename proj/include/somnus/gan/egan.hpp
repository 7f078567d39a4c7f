// Copyright 2026 The Somnus Authors.
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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "somnus/ad/adam.hpp"
#include "somnus/ad/checkpoint.hpp"
#include "somnus/ad/layers.hpp"
#include "somnus/ad/params.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/core/stage.hpp"
#include "somnus/data/epoch.hpp"

namespace somnus::gan {

// Sizes shared by the generator and the discriminator. The first conv uses a
// kernel of F_s/2 and a stride of F_s/16, both rounded to whole samples.
struct GanArchitecture {
  std::size_t noise_dim = 100;
  std::size_t epoch_length = 3000;
  double sampling_rate = 100.0;
  std::array<std::size_t, 4> filters{64, 64, 128, 128};
  std::size_t hidden = 128;
  double slope = 0.2;

  std::size_t first_kernel() const;
  std::size_t first_stride() const;
  // Throws ConfigError for sizes the layers cannot realize.
  void validate() const;
};

// Replication shapes: 100 → 3000 at 100 Hz and 125 → 3750 at 125 Hz.
GanArchitecture sleep_edf_architecture();
GanArchitecture shhs_architecture();

// noise[B, noise_dim] → upsample to epoch_length → four conv blocks with
// leaky ReLU → LSTM over conv time steps → last hidden state → linear to
// epoch_length → tanh.
class Generator {
 public:
  Generator(const GanArchitecture& arch, std::uint64_t seed);

  ad::Tensor forward(const ad::Tensor& noise) const;  // [B, epoch_length]
  const GanArchitecture& architecture() const { return arch_; }
  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }

 private:
  GanArchitecture arch_;
  ad::ParamSet params_;
  std::array<ad::Conv1dLayer, 4> convs_;
  ad::LstmLayer lstm_;
  ad::LinearLayer head_;
};

// epochs[B, epoch_length] → conv block → pool 4 → three conv blocks → pool 2
// → LSTM → last hidden state → linear → sigmoid → [B].
class Discriminator {
 public:
  Discriminator(const GanArchitecture& arch, std::uint64_t seed);

  ad::Tensor forward(const ad::Tensor& epochs) const;
  const GanArchitecture& architecture() const { return arch_; }
  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }

 private:
  GanArchitecture arch_;
  ad::ParamSet params_;
  std::array<ad::Conv1dLayer, 4> convs_;
  ad::LstmLayer lstm_;
  ad::LinearLayer head_;
};

struct GanTrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t batch_size = 16;
  std::size_t train_epochs = 660;
  std::uint64_t seed = 0;
  Stage target_stage = Stage::kN1;
  std::size_t d_steps = 1;            // discriminator updates per generator update
  std::size_t checkpoint_every = 0;   // 0 disables periodic checkpoints
  double d_learning_rate = 0.0;       // 0 reuses learning_rate
  double real_label = 1.0;            // target for real epochs in the discriminator loss
  // Standard deviation of Gaussian noise added to every discriminator input,
  // moving linearly from instance_noise to instance_noise_final over
  // train_epochs.
  double instance_noise = 0.0;
  double instance_noise_final = 0.0;

  void validate() const;
};

struct GanEpochLog {
  std::int64_t epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_acc = 0.0;  // on the real and fake batches seen by D steps

  bool operator==(const GanEpochLog&) const = default;
};

struct DStepResult {
  double loss = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

// Throws DataError unless every sample lies in [-1, 1].
void require_normalized(std::span<const LabeledEpoch> epochs);

ad::Tensor stack_epochs(std::span<const LabeledEpoch> epochs,
                        std::span<const std::size_t> order);

class GanTrainer {
 public:
  GanTrainer(const GanArchitecture& arch, const GanTrainConfig& config);

  // Real minority epochs (at least two batches, normalized).
  void set_real(std::vector<LabeledEpoch> real);

  // One discriminator update on (real → 1, fresh fake → 0).
  DStepResult d_step(const ad::Tensor& real_batch, Rng& rng);
  // One non-saturating generator update (fresh fake → 1).
  double g_step(std::size_t batch, Rng& rng);

  // Shuffles the real set with a stream derived from (seed, epoch) and runs
  // d_steps D updates plus one G update per mini-batch.
  GanEpochLog train_epoch(std::int64_t epoch);

  // Trains until `config.train_epochs` (or through `stop_after_epoch`),
  // starting after the last logged epoch. Periodic checkpoints go to `dir` as
  // gan-epoch-XXXX.segk, plus a rolling gan-resume.segk holding both networks
  // and optimizer states.
  void train(const std::optional<std::filesystem::path>& dir,
             std::optional<std::int64_t> stop_after_epoch = std::nullopt,
             const std::function<void(const GanEpochLog&)>& on_epoch = {});

  ad::Checkpoint checkpoint() const;
  void restore(const ad::Checkpoint& checkpoint);

  Generator& generator() { return generator_; }
  const Generator& generator() const { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  const Discriminator& discriminator() const { return discriminator_; }
  const std::vector<GanEpochLog>& log() const { return log_; }
  const GanTrainConfig& config() const { return config_; }

 private:
  ad::Tensor noise(std::size_t batch, Rng& rng) const;
  ad::Tensor perturb(const ad::Tensor& x, Rng& rng) const;
  double noise_std() const;

  GanArchitecture arch_;
  GanTrainConfig config_;
  Generator generator_;
  Discriminator discriminator_;
  ad::AdamState g_adam_;
  ad::AdamState d_adam_;
  std::vector<LabeledEpoch> real_;
  std::vector<GanEpochLog> log_;
  std::int64_t current_epoch_ = 0;
};

// Generator-only checkpoint (kind "generator"): architecture sizes are kept
// as small arrays so a checkpoint is self-describing.
ad::Checkpoint generator_checkpoint(const Generator& generator, Stage stage,
                                    std::int64_t epoch, std::uint64_t seed);
struct LoadedGenerator {
  Generator generator;
  Stage stage;
};
LoadedGenerator load_generator(const ad::Checkpoint& checkpoint);

// n epochs in (-1, 1) tagged Generated with `stage`, generated in batches.
std::vector<LabeledEpoch> sample_minority(const Generator& generator, std::size_t n,
                                          Stage stage, std::uint64_t seed,
                                          std::size_t batch = 64);

// Fraction of correct calls (p > 0.5 for real, p < 0.5 for fake).
double discriminator_accuracy(const Discriminator& discriminator,
                              std::span<const LabeledEpoch> real,
                              std::span<const LabeledEpoch> fake);

}  // namespace somnus::gan
