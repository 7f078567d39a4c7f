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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "somnus/core/rng.hpp"
#include "somnus/core/stage.hpp"
#include "somnus/data/epoch.hpp"

namespace somnus::data {

// ---------------------------------------------------------------------------
// Per-recording robust scaling.

inline constexpr double kNormalizePercentile = 99.5;

struct RobustScale {
  double median = 0.0;
  double scale = 0.0;  // percentile of |x - median|
};

// Linear-interpolated percentile of |x - median| over every sample.
RobustScale robust_scale(std::span<const LabeledEpoch> epochs,
                         double percentile = kNormalizePercentile);

// Epochs of a single recording, scaled by (x - median) / scale and clamped to
// [-1, 1]. A zero scale drops every epoch (with a warning).
std::vector<LabeledEpoch> normalize_recording(std::vector<LabeledEpoch> epochs);

// Groups by recording_id (first-appearance order) and normalizes each group.
std::vector<LabeledEpoch> normalize(std::vector<LabeledEpoch> epochs);

// ---------------------------------------------------------------------------
// Sequences and augmentation.

struct EpochSequence {
  std::vector<LabeledEpoch> epochs;
};

// Rotates the concatenated signal by `shift` samples (positive moves samples
// toward later positions) and re-splits it at the original epoch lengths.
EpochSequence circular_shift(const EpochSequence& sequence, std::int64_t shift);
void circular_shift_inplace(std::span<double> signal, std::int64_t shift);

// Uniform shift in [-max_shift, max_shift]; max_shift must be below the
// epoch length.
std::int64_t draw_shift(std::size_t max_shift, std::size_t epoch_length, Rng& rng);
EpochSequence signal_augment(const EpochSequence& sequence,
                             std::size_t max_shift, Rng& rng);

// Start positions of length-L chunks after skipping `offset` positions.
std::vector<std::size_t> chunk_starts(std::size_t stream_length,
                                      std::size_t length, std::size_t offset);

// Draws an offset in [0, L) and chunks the stream. Streams shorter than L
// yield nothing and log a warning.
std::vector<EpochSequence> sequence_augment(std::span<const LabeledEpoch> stream,
                                            std::size_t length, Rng& rng);

// A run of epochs (indices into a dataset) that may be cut into sequences.
// Real streams are temporally contiguous runs of one recording; generated
// epochs of one stage form a stream of their own.
struct Stream {
  std::string subject_id;
  std::string recording_id;
  EpochSource source = EpochSource::kReal;
  std::vector<std::size_t> members;
};

std::vector<Stream> build_streams(std::span<const LabeledEpoch> epochs);

// One training epoch's worth of sequence index lists: each stream gets its
// own random offset in [0, min(L - 1, n - L)], so every stream of at least L
// epochs yields a sequence; shorter streams are skipped.
std::vector<std::vector<std::size_t>> plan_sequences(
    std::span<const Stream> streams, std::size_t length, Rng& rng);

// Deterministic evaluation chunking: offset 0, and the final partial chunk is
// kept (it is shorter than L).
std::vector<std::vector<std::size_t>> evaluation_sequences(
    std::span<const Stream> streams, std::size_t length);

// ---------------------------------------------------------------------------
// Minority-class rebalancing.

enum class RebalancePolicy { kNone, kSecondSmallest, kTargetCount };

RebalancePolicy parse_rebalance_policy(std::string_view text);
std::string_view rebalance_policy_name(RebalancePolicy policy);

struct RebalanceConfig {
  RebalancePolicy policy = RebalancePolicy::kSecondSmallest;
  std::size_t target_count = 0;  // used by kTargetCount
};

using StageCounts = std::array<std::size_t, kNumStages>;

struct RebalancePlan {
  Stage minority = Stage::kN1;
  std::size_t current = 0;
  std::size_t target = 0;
  std::size_t to_generate = 0;
};

// Minority is the smallest class (lowest stage index on ties).
RebalancePlan plan_rebalance(const StageCounts& counts,
                             const RebalanceConfig& config);
StageCounts apply_plan(StageCounts counts, const RebalancePlan& plan);

// Produces `count` epochs of `stage`. Typically backed by a trained generator.
using EpochSampler =
    std::function<std::vector<LabeledEpoch>(Stage stage, std::size_t count)>;

// Appends Generated epochs for the minority class of `training` until the
// policy target is met. An empty sampler is a ConfigError when epochs are
// needed.
std::vector<LabeledEpoch> rebalance(std::vector<LabeledEpoch> training,
                                    const EpochSampler& sampler,
                                    const RebalanceConfig& config);

struct ReplicationPreset {
  std::string_view name;
  StageCounts before;
  RebalanceConfig config;
};

// Class counts before augmentation for the two rebalanced public corpora,
// with the target that reproduces their published post-augmentation counts.
inline constexpr ReplicationPreset kSleepEdf20Preset{
    "sleep-edf-20", {10197, 2804, 17799, 5703, 7717},
    {RebalancePolicy::kTargetCount, 8120}};
inline constexpr ReplicationPreset kShhsPreset{
    "shhs", {46319, 10304, 142125, 60153, 65953},
    {RebalancePolicy::kTargetCount, 46272}};

// ---------------------------------------------------------------------------
// Subject-wise cross-validation.

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct FoldPlan {
  std::size_t k = 0;
  std::vector<Fold> folds;
};

// Shuffles the subjects with `seed`, splits them into k near-equal test
// groups, and holds out ceil(val_fraction * n_train) training subjects of
// each fold for validation.
FoldPlan make_folds(std::vector<std::string> subjects, std::size_t k,
                    double val_fraction, std::uint64_t seed);

// Throws DataError when a subject is in two roles of a fold, when test sets
// do not partition `subjects`, or when any set is malformed.
void check_fold_plan(const FoldPlan& plan, std::span<const std::string> subjects);

// Sorted unique subject ids of real epochs.
std::vector<std::string> subjects_of(std::span<const LabeledEpoch> epochs);

std::vector<LabeledEpoch> select_subjects(std::span<const LabeledEpoch> epochs,
                                          std::span<const std::string> subjects);

// Throws DataError if validation or test data contain generated epochs or
// share a subject with training data.
void check_split(std::span<const LabeledEpoch> train,
                 std::span<const LabeledEpoch> validation,
                 std::span<const LabeledEpoch> test);

}  // namespace somnus::data
