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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "somnus/clf/classifier.hpp"
#include "somnus/data/pipeline.hpp"
#include "somnus/eval/ensemble.hpp"
#include "somnus/eval/metrics.hpp"
#include "somnus/gan/egan.hpp"

namespace somnus::eval {

// Component switches of a cross-validation run:
//   naive     no generated epochs, single best checkpoint
//   egan      generated minority epochs, single best checkpoint
//   ensemble  no generated epochs, top-M vote
//   full      generated minority epochs and top-M vote
enum class Ablation { kNaive, kEgan, kEnsemble, kFull };

Ablation parse_ablation(std::string_view text);
std::string_view ablation_name(Ablation a);
bool uses_gan(Ablation a);
bool uses_ensemble(Ablation a);

struct CvConfig {
  clf::ClassifierArchitecture clf_arch;
  clf::ClfTrainConfig clf;
  gan::GanArchitecture gan_arch;
  gan::GanTrainConfig gan;
  data::RebalanceConfig rebalance;
  std::size_t folds = 20;
  double validation_fraction = 0.1;
  std::size_t ensemble_size = 10;
  // Members kept in each fold's prediction cache (for the M sweep); at least
  // ensemble_size, capped by the bank size.
  std::size_t cache_members = 10;
  Ablation ablation = Ablation::kFull;
  // When false, class weights reset to 1 in folds that received generated
  // epochs.
  bool keep_class_weights = true;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  void validate() const;
};

struct FoldResult {
  std::size_t fold = 0;
  data::Fold split;
  std::size_t train_epochs = 0;      // real plus generated
  std::size_t generated_epochs = 0;
  std::vector<clf::EpochRecord> records;
  PredictionCache cache;
  std::vector<int> predictions;      // voted test labels, aligned with cache.truth
  MetricsReport report;
};

struct CvResult {
  std::vector<FoldResult> folds;
  MetricsReport pooled;  // all test predictions in one confusion matrix
};

// Seeds handed to fold-level components, derived from the run seed.
std::uint64_t fold_classifier_seed(std::uint64_t seed, std::size_t fold);
std::uint64_t fold_gan_seed(std::uint64_t seed, std::size_t fold);

// Trains and evaluates one fold. With `dir`, checkpoints, the GAN state and
// the prediction cache live under it; with `resume`, a finished fold is
// reloaded from its cache and an unfinished one continues from its last
// checkpoint.
FoldResult run_fold(std::span<const LabeledEpoch> dataset, const data::FoldPlan& plan,
                    std::size_t fold, const CvConfig& config,
                    const std::optional<std::filesystem::path>& dir, bool resume);

// Runs every fold (config.jobs at a time) and pools the test predictions.
// Fold directories are dir/fold-XX.
CvResult run_cv(std::span<const LabeledEpoch> dataset, const data::FoldPlan& plan,
                const CvConfig& config, const std::optional<std::filesystem::path>& dir,
                bool resume = false);

}  // namespace somnus::eval
