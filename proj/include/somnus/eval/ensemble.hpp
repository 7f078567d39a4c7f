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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "somnus/clf/classifier.hpp"
#include "somnus/eval/metrics.hpp"

namespace somnus::eval {

// The m records with the highest validation accuracy, best first. Ties go to
// the higher validation MF1, then to the later epoch. m must lie in
// [1, records.size()].
std::vector<clf::EpochRecord> select_top_m(std::span<const clf::EpochRecord> records,
                                           std::size_t m);

// Per sample, the most frequent label among members. Tied counts go to the
// label with the highest mean probability; remaining ties go to the lowest
// stage index. Probability sums run in sorted order, so the result does not
// depend on member order.
std::vector<int> majority_vote(std::span<const std::vector<int>> labels,
                               std::span<const std::vector<clf::ClassProbabilities>> probs);

// Test-set predictions of every cached bank member, with the truth labels.
struct CachedMember {
  clf::EpochRecord record;
  std::vector<int> labels;
  std::vector<clf::ClassProbabilities> probs;

  bool operator==(const CachedMember&) const = default;
};

struct PredictionCache {
  std::vector<int> truth;
  std::vector<CachedMember> members;

  bool operator==(const PredictionCache&) const = default;
};

// Runs every member of `records` (loaded from `bank`) over `epochs`.
PredictionCache build_prediction_cache(const clf::CheckpointBank& bank,
                                       std::span<const clf::EpochRecord> records,
                                       std::span<const LabeledEpoch> epochs,
                                       std::size_t sequence_length);

// Majority vote of the top-m cached members.
std::vector<int> ensemble_labels(const PredictionCache& cache, std::size_t m);

// SEGP binary container. save_prediction_cache also writes a tab-separated
// member index next to the file (same stem, .tsv).
std::vector<std::uint8_t> encode_prediction_cache(const PredictionCache& cache);
PredictionCache decode_prediction_cache(std::span<const std::uint8_t> bytes);
std::string prediction_cache_index(const PredictionCache& cache);
void save_prediction_cache(const std::filesystem::path& path, const PredictionCache& cache);
PredictionCache load_prediction_cache(const std::filesystem::path& path);

struct SweepRow {
  std::size_t m = 0;
  MetricsReport report;
};

// One report per ensemble size, computed from cached predictions alone.
std::vector<SweepRow> sensitivity_sweep(std::span<const PredictionCache> caches,
                                        std::span<const std::size_t> sizes);

// Accuracy range of majority votes over every member subset whose size lies
// in [min_m, max_m], pooled over the caches.
struct VoteSimulation {
  std::size_t subsets = 0;
  double min_acc = 0.0;
  double max_acc = 0.0;
  double spread() const { return max_acc - min_acc; }
};

VoteSimulation simulate_votes(std::span<const PredictionCache> caches, std::size_t min_m,
                              std::size_t max_m);

// Max minus min accuracy across sweep rows.
double sweep_spread(std::span<const SweepRow> rows);

}  // namespace somnus::eval
