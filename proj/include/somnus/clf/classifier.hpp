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
#include <string>
#include <vector>

#include "somnus/ad/adam.hpp"
#include "somnus/ad/checkpoint.hpp"
#include "somnus/ad/layers.hpp"
#include "somnus/ad/ops.hpp"
#include "somnus/ad/params.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/data/epoch.hpp"
#include "somnus/data/pipeline.hpp"

namespace somnus::clf {

// Conv front end: block 1 (filters[0], kernel F_s/2, stride F_s/4) → pool 8
// → dropout → blocks 2-3 (filters[1], kernel 8) → pool 4 → dropout →
// blocks 4-5 (filters[2], kernel 8) → pool 2. Pools keep ceil(len/window).
struct ClassifierArchitecture {
  std::size_t epoch_length = 3000;
  double sampling_rate = 100.0;
  std::array<std::size_t, 3> filters{128, 128, 256};
  std::size_t hidden = 128;
  double dropout = 0.5;

  std::size_t first_kernel() const;
  std::size_t first_stride() const;
  std::size_t feature_length() const;  // CNN output size per epoch
  void validate() const;
};

ClassifierArchitecture sleep_edf_classifier();
ClassifierArchitecture shhs_classifier();

struct SequenceOutput {
  ad::Tensor logits;    // [B, L, 5]
  ad::LstmState state;  // after the last step
};

class Classifier {
 public:
  Classifier(const ClassifierArchitecture& arch, std::uint64_t seed);

  // epochs[B, L, epoch_length]. The LSTM starts from `initial` or zeros.
  // Dropout is active only when `training` (then `rng` is required).
  SequenceOutput forward(const ad::Tensor& epochs, bool training, Rng* rng = nullptr,
                         const ad::LstmState* initial = nullptr) const;

  // softmax(forward(...).logits) over the class axis → [B, L, 5].
  ad::Tensor classify_sequence(const ad::Tensor& epochs, bool training,
                               Rng* rng = nullptr) const;

  // CNN features of x[N, epoch_length] → [N, feature_length].
  ad::Tensor features(const ad::Tensor& x, bool training, Rng* rng) const;

  const ClassifierArchitecture& architecture() const { return arch_; }
  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }

 private:
  ClassifierArchitecture arch_;
  ad::ParamSet params_;
  std::array<ad::Conv1dLayer, 5> convs_;
  ad::LstmLayer lstm_;
  ad::LinearLayer head_;
};

// Argmax per row of a [..., 5] distribution; ties go to the lowest index.
std::vector<int> predict(const ad::Tensor& distribution);
int argmax5(std::span<const double> row);

using ClassProbabilities = std::array<double, kNumStages>;

// Inference over whole streams: each stream is cut into consecutive length-L
// chunks (final chunk may be shorter), the LSTM state restarts at every chunk.
// Returns one distribution per epoch, aligned with `epochs`; epochs outside
// every stream keep zeros.
std::vector<ClassProbabilities> infer_probabilities(const Classifier& classifier,
                                                    std::span<const LabeledEpoch> epochs,
                                                    std::size_t sequence_length,
                                                    std::size_t batch = 64);

struct ClfTrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t train_epochs = 200;
  std::size_t batch_size = 8;
  std::size_t sequence_length = 20;
  ad::ClassWeights class_weights{{1.0, 1.5, 1.0, 1.0, 1.0}};
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  bool signal_augment = true;
  std::size_t max_shift = 0;  // 0 selects half an epoch
  bool sequence_augment = true;

  void validate() const;
};

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double val_mf1 = 0.0;
  std::string file;  // checkpoint file name within the bank directory

  bool operator==(const EpochRecord&) const = default;
};

// One snapshot per completed training epoch. With a directory, snapshots live
// on disk as clf-epoch-XXXX.segk next to a bank.tsv index; without one they
// stay in memory.
class CheckpointBank {
 public:
  CheckpointBank() = default;
  explicit CheckpointBank(std::filesystem::path directory);

  // Reads bank.tsv from `directory`.
  static CheckpointBank open(const std::filesystem::path& directory);

  void add(EpochRecord record, ad::Checkpoint checkpoint);
  const std::vector<EpochRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const std::optional<std::filesystem::path>& directory() const { return directory_; }

  ad::Checkpoint load(std::int64_t epoch) const;
  // Drops entries after `epoch` (used when resuming).
  void truncate_after(std::int64_t epoch);

  std::string index_text() const;
  static std::vector<EpochRecord> parse_index(std::string_view text);

 private:
  void write_index() const;

  std::optional<std::filesystem::path> directory_;
  std::vector<EpochRecord> records_;
  std::vector<ad::Checkpoint> memory_;
};

// Classifier weights plus architecture sizes, self-describing.
ad::Checkpoint classifier_checkpoint(const Classifier& classifier,
                                     const EpochRecord& record, std::uint64_t seed);
Classifier load_classifier(const ad::Checkpoint& checkpoint);

class ClassifierTrainer {
 public:
  ClassifierTrainer(const ClassifierArchitecture& arch, const ClfTrainConfig& config);

  // Training may contain Generated epochs; validation must be Real and
  // non-empty.
  void set_data(std::vector<LabeledEpoch> train, std::vector<LabeledEpoch> validation);

  // One pass of shuffled mini-batches with the epoch's own random stream,
  // followed by validation.
  EpochRecord train_epoch(std::int64_t epoch);

  // Trains until config.train_epochs (or through `stop_after_epoch`),
  // appending to `bank`. With a bank directory a rolling resume.segk is kept;
  // `resume` picks it up and continues from the following epoch.
  void train(CheckpointBank& bank, bool resume = false,
             std::optional<std::int64_t> stop_after_epoch = std::nullopt,
             const std::function<void(const EpochRecord&)>& on_epoch = {});

  ad::Checkpoint resume_state(std::int64_t epoch) const;
  void restore(const ad::Checkpoint& state);

  Classifier& classifier() { return classifier_; }
  const Classifier& classifier() const { return classifier_; }
  std::int64_t next_epoch() const { return next_epoch_; }

 private:
  ClassifierArchitecture arch_;
  ClfTrainConfig config_;
  Classifier classifier_;
  ad::AdamState adam_;
  std::vector<LabeledEpoch> train_;
  std::vector<LabeledEpoch> validation_;
  std::vector<data::Stream> train_streams_;
  std::int64_t next_epoch_ = 0;
};

}  // namespace somnus::clf
