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

#include "somnus/eval/cv.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>

#include "somnus/ad/checkpoint.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/log.hpp"
#include "somnus/core/rng.hpp"

namespace somnus::eval {

namespace {

constexpr std::array<std::string_view, 4> kAblationNames{"naive", "egan", "ensemble", "full"};

std::string fold_name(std::size_t fold) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fold-%02zu", fold);
  return buf;
}

std::vector<LabeledEpoch> generate_and_rebalance(
    std::vector<LabeledEpoch> train, const data::RebalancePlan& plan, const CvConfig& config,
    std::size_t fold, const std::optional<std::filesystem::path>& fold_dir, bool resume) {
  gan::GanTrainConfig gcfg = config.gan;
  gcfg.seed = fold_gan_seed(config.seed, fold);
  gcfg.target_stage = plan.minority;
  std::vector<LabeledEpoch> minority;
  for (const auto& e : train) {
    if (e.stage == plan.minority && e.source == EpochSource::kReal) minority.push_back(e);
  }
  if (minority.size() < 2 * gcfg.batch_size) {
    throw DataError(fold_name(fold) + ": minority stage " +
                    std::string(stage_name(plan.minority)) + " has " +
                    std::to_string(minority.size()) +
                    " real training epochs, GAN training needs at least " +
                    std::to_string(2 * gcfg.batch_size));
  }
  gan::GanTrainer trainer(config.gan_arch, gcfg);
  trainer.set_real(std::move(minority));
  std::optional<std::filesystem::path> gan_dir;
  if (fold_dir) {
    gan_dir = *fold_dir / "gan";
    std::filesystem::create_directories(*gan_dir);
    const auto state = *gan_dir / "gan-resume.segk";
    if (resume && std::filesystem::exists(state)) trainer.restore(ad::load_checkpoint(state));
  }
  trainer.train(gan_dir);
  if (gan_dir) {
    ad::save_checkpoint(*gan_dir / "generator.segk",
                        gan::generator_checkpoint(trainer.generator(), plan.minority,
                                                  static_cast<std::int64_t>(gcfg.train_epochs) - 1,
                                                  gcfg.seed));
  }
  const std::uint64_t sample_seed = derive_seed(gcfg.seed, "fold-sample");
  const data::EpochSampler sampler = [&](Stage stage, std::size_t n) {
    return gan::sample_minority(trainer.generator(), n, stage, sample_seed);
  };
  return data::rebalance(std::move(train), sampler, config.rebalance);
}

}  // namespace

Ablation parse_ablation(std::string_view text) {
  for (std::size_t i = 0; i < kAblationNames.size(); ++i) {
    if (text == kAblationNames[i]) return static_cast<Ablation>(i);
  }
  throw ConfigError("unknown ablation '" + std::string(text) +
                    "'; expected naive, egan, ensemble or full");
}

std::string_view ablation_name(Ablation a) { return kAblationNames[static_cast<std::size_t>(a)]; }

bool uses_gan(Ablation a) { return a == Ablation::kEgan || a == Ablation::kFull; }
bool uses_ensemble(Ablation a) { return a == Ablation::kEnsemble || a == Ablation::kFull; }

void CvConfig::validate() const {
  clf_arch.validate();
  clf.validate();
  if (uses_gan(ablation)) {
    gan_arch.validate();
    gan.validate();
    if (gan_arch.epoch_length != clf_arch.epoch_length) {
      throw ConfigError("GAN epoch length " + std::to_string(gan_arch.epoch_length) +
                        " differs from the classifier's " +
                        std::to_string(clf_arch.epoch_length));
    }
  }
  if (folds < 2) throw ConfigError("cv.folds must be at least 2");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("cv.validation_fraction must lie in (0, 1)");
  }
  if (ensemble_size == 0) throw ConfigError("ensemble.m must be at least 1");
  if (uses_ensemble(ablation) && ensemble_size > clf.train_epochs) {
    throw ConfigError("ensemble.m = " + std::to_string(ensemble_size) + " exceeds the " +
                      std::to_string(clf.train_epochs) + " training epochs");
  }
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
}

std::uint64_t fold_classifier_seed(std::uint64_t seed, std::size_t fold) {
  return derive_seed(seed, "fold-classifier", fold);
}

std::uint64_t fold_gan_seed(std::uint64_t seed, std::size_t fold) {
  return derive_seed(seed, "fold-gan", fold);
}

FoldResult run_fold(std::span<const LabeledEpoch> dataset, const data::FoldPlan& plan,
                    std::size_t fold, const CvConfig& config,
                    const std::optional<std::filesystem::path>& dir, bool resume) {
  config.validate();
  if (fold >= plan.folds.size()) {
    throw UsageError("fold " + std::to_string(fold) + " is outside the plan");
  }
  FoldResult result;
  result.fold = fold;
  result.split = plan.folds[fold];
  const auto& split = result.split;
  auto train = data::select_subjects(dataset, split.train);
  const auto validation = data::select_subjects(dataset, split.validation);
  const auto test = data::select_subjects(dataset, split.test);
  if (test.empty()) throw DataError("fold " + std::to_string(fold) + " has an empty test set");
  if (validation.empty()) {
    throw DataError("fold " + std::to_string(fold) + " has an empty validation set");
  }

  std::optional<std::filesystem::path> fold_dir;
  if (dir) {
    fold_dir = *dir / fold_name(fold);
    std::filesystem::create_directories(*fold_dir);
  }

  if (uses_gan(config.ablation)) {
    const auto rplan = data::plan_rebalance(count_stages(train), config.rebalance);
    if (rplan.to_generate > 0) {
      log::info(fold_name(fold) + ": generating " + std::to_string(rplan.to_generate) + " " +
                std::string(stage_name(rplan.minority)) + " epochs");
      train = generate_and_rebalance(std::move(train), rplan, config, fold, fold_dir, resume);
      result.generated_epochs = rplan.to_generate;
    }
  }
  data::check_split(train, validation, test);
  result.train_epochs = train.size();

  clf::ClfTrainConfig ccfg = config.clf;
  ccfg.seed = fold_classifier_seed(config.seed, fold);
  if (result.generated_epochs > 0 && !config.keep_class_weights) {
    ccfg.class_weights.values.fill(1.0);
  }
  clf::ClassifierTrainer trainer(config.clf_arch, ccfg);
  trainer.set_data(std::move(train), validation);
  clf::CheckpointBank bank;
  if (fold_dir) {
    const auto bank_dir = *fold_dir / "bank";
    bank = resume && std::filesystem::exists(bank_dir / "bank.tsv")
               ? clf::CheckpointBank::open(bank_dir)
               : clf::CheckpointBank(bank_dir);
  }
  trainer.train(bank, resume && fold_dir.has_value());
  result.records = bank.records();

  const std::size_t m = uses_ensemble(config.ablation) ? config.ensemble_size : 1;
  if (m > bank.size()) {
    throw ConfigError("ensemble size " + std::to_string(m) + " exceeds the " +
                      std::to_string(bank.size()) + " checkpoints of " + fold_name(fold));
  }
  const std::size_t keep = std::min(std::max(config.cache_members, m), bank.size());
  const auto members = select_top_m(bank.records(), keep);
  result.cache = build_prediction_cache(bank, members, test, ccfg.sequence_length);
  if (fold_dir) save_prediction_cache(*fold_dir / "predictions.segp", result.cache);
  result.predictions = ensemble_labels(result.cache, m);
  result.report = metrics(result.cache.truth, result.predictions);
  log::info(fold_name(fold) + ": test accuracy " + std::to_string(result.report.acc));
  return result;
}

CvResult run_cv(std::span<const LabeledEpoch> dataset, const data::FoldPlan& plan,
                const CvConfig& config, const std::optional<std::filesystem::path>& dir,
                bool resume) {
  config.validate();
  data::check_fold_plan(plan, data::subjects_of(dataset));
  const std::size_t k = plan.folds.size();
  CvResult out;
  out.folds.resize(k);
  std::vector<std::exception_ptr> errors(k);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < k; f = next++) {
      try {
        out.folds[f] = run_fold(dataset, plan, f, config, dir, resume);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, k);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Confusion pooled{};
  for (const auto& f : out.folds) pooled += f.report.confusion;
  out.pooled = metrics(pooled);
  return out;
}

}  // namespace somnus::eval
