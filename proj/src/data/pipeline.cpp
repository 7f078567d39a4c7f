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

#include "somnus/data/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "somnus/core/errors.hpp"
#include "somnus/core/log.hpp"

namespace somnus::data {

namespace {

double sorted_median(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sorted_percentile(const std::vector<double>& v, double percentile) {
  const double pos = percentile / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

RobustScale robust_scale(std::span<const LabeledEpoch> epochs, double percentile) {
  std::vector<double> values;
  for (const auto& e : epochs) values.insert(values.end(), e.samples.begin(), e.samples.end());
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  RobustScale out;
  out.median = sorted_median(values);
  for (double& v : values) v = std::abs(v - out.median);
  std::sort(values.begin(), values.end());
  out.scale = sorted_percentile(values, percentile);
  return out;
}

std::vector<LabeledEpoch> normalize_recording(std::vector<LabeledEpoch> epochs) {
  if (epochs.empty()) return epochs;
  const RobustScale rs = robust_scale(epochs);
  if (!(rs.scale > 0.0) || !std::isfinite(rs.scale)) {
    log::warn("recording '" + epochs.front().recording_id +
              "' has zero spread; dropping its " + std::to_string(epochs.size()) +
              " epochs");
    return {};
  }
  for (auto& e : epochs) {
    for (float& x : e.samples) {
      const double y = (static_cast<double>(x) - rs.median) / rs.scale;
      x = static_cast<float>(std::clamp(y, -1.0, 1.0));
    }
  }
  return epochs;
}

std::vector<LabeledEpoch> normalize(std::vector<LabeledEpoch> epochs) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<LabeledEpoch>> groups;
  for (auto& e : epochs) {
    auto [it, inserted] = groups.try_emplace(e.recording_id);
    if (inserted) order.push_back(e.recording_id);
    it->second.push_back(std::move(e));
  }
  std::vector<LabeledEpoch> out;
  out.reserve(epochs.size());
  for (const auto& id : order) {
    auto normalized = normalize_recording(std::move(groups[id]));
    for (auto& e : normalized) out.push_back(std::move(e));
  }
  return out;
}

void circular_shift_inplace(std::span<double> signal, std::int64_t shift) {
  const auto n = static_cast<std::int64_t>(signal.size());
  if (n == 0) return;
  const std::int64_t s = ((shift % n) + n) % n;
  if (s == 0) return;
  std::rotate(signal.begin(), signal.end() - s, signal.end());
}

EpochSequence circular_shift(const EpochSequence& sequence, std::int64_t shift) {
  std::vector<double> signal;
  for (const auto& e : sequence.epochs) {
    signal.insert(signal.end(), e.samples.begin(), e.samples.end());
  }
  circular_shift_inplace(signal, shift);
  EpochSequence out = sequence;
  std::size_t pos = 0;
  for (auto& e : out.epochs) {
    for (float& x : e.samples) x = static_cast<float>(signal[pos++]);
  }
  return out;
}

std::int64_t draw_shift(std::size_t max_shift, std::size_t epoch_length, Rng& rng) {
  if (epoch_length > 0 && max_shift >= epoch_length) {
    throw ConfigError("augment.max_shift (" + std::to_string(max_shift) +
                      ") must be below the epoch length (" +
                      std::to_string(epoch_length) + ")");
  }
  const auto m = static_cast<std::int64_t>(max_shift);
  std::uniform_int_distribution<std::int64_t> dist(-m, m);
  return dist(rng);
}

EpochSequence signal_augment(const EpochSequence& sequence,
                             std::size_t max_shift, Rng& rng) {
  const std::size_t len =
      sequence.epochs.empty() ? 0 : sequence.epochs.front().samples.size();
  return circular_shift(sequence, draw_shift(max_shift, len, rng));
}

std::vector<std::size_t> chunk_starts(std::size_t stream_length,
                                      std::size_t length, std::size_t offset) {
  std::vector<std::size_t> out;
  if (length == 0) throw ConfigError("sequence_length must be positive");
  for (std::size_t s = offset; s + length <= stream_length; s += length) {
    out.push_back(s);
  }
  return out;
}

std::vector<EpochSequence> sequence_augment(std::span<const LabeledEpoch> stream,
                                            std::size_t length, Rng& rng) {
  if (length == 0) throw ConfigError("sequence_length must be positive");
  if (stream.size() < length) {
    log::warn("stream of " + std::to_string(stream.size()) +
              " epochs is shorter than the sequence length " +
              std::to_string(length) + "; skipped");
    return {};
  }
  std::uniform_int_distribution<std::size_t> offset_dist(0, length - 1);
  std::vector<EpochSequence> out;
  for (std::size_t s : chunk_starts(stream.size(), length, offset_dist(rng))) {
    EpochSequence seq;
    seq.epochs.assign(stream.begin() + static_cast<std::ptrdiff_t>(s),
                      stream.begin() + static_cast<std::ptrdiff_t>(s + length));
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<Stream> build_streams(std::span<const LabeledEpoch> epochs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> real;
  std::vector<Stage> gen_order;
  std::map<Stage, std::vector<std::size_t>> generated;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& e = epochs[i];
    if (e.source == EpochSource::kGenerated) {
      auto [it, inserted] = generated.try_emplace(e.stage);
      if (inserted) gen_order.push_back(e.stage);
      it->second.push_back(i);
    } else {
      auto [it, inserted] = real.try_emplace(e.recording_id);
      if (inserted) order.push_back(e.recording_id);
      it->second.push_back(i);
    }
  }
  std::vector<Stream> out;
  for (const auto& id : order) {
    auto members = real[id];
    std::stable_sort(members.begin(), members.end(), [&](auto a, auto b) {
      return epochs[a].index < epochs[b].index;
    });
    Stream current;
    for (std::size_t m : members) {
      if (!current.members.empty() &&
          epochs[m].index != epochs[current.members.back()].index + 1) {
        out.push_back(std::move(current));
        current = Stream{};
      }
      if (current.members.empty()) {
        current.subject_id = epochs[m].subject_id;
        current.recording_id = id;
      }
      current.members.push_back(m);
    }
    if (!current.members.empty()) out.push_back(std::move(current));
  }
  for (Stage stage : gen_order) {
    Stream s;
    s.subject_id = "generated";
    s.recording_id = "generated:" + std::string(stage_name(stage));
    s.source = EpochSource::kGenerated;
    s.members = generated[stage];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::vector<std::size_t>> plan_sequences(
    std::span<const Stream> streams, std::size_t length, Rng& rng) {
  if (length == 0) throw ConfigError("sequence_length must be positive");
  std::vector<std::vector<std::size_t>> out;
  for (const auto& s : streams) {
    if (s.members.size() < length) continue;
    std::uniform_int_distribution<std::size_t> offset_dist(
        0, std::min(length - 1, s.members.size() - length));
    for (std::size_t start : chunk_starts(s.members.size(), length, offset_dist(rng))) {
      out.emplace_back(s.members.begin() + static_cast<std::ptrdiff_t>(start),
                       s.members.begin() + static_cast<std::ptrdiff_t>(start + length));
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> evaluation_sequences(
    std::span<const Stream> streams, std::size_t length) {
  if (length == 0) throw ConfigError("sequence_length must be positive");
  std::vector<std::vector<std::size_t>> out;
  for (const auto& s : streams) {
    for (std::size_t start = 0; start < s.members.size(); start += length) {
      const std::size_t end = std::min(start + length, s.members.size());
      out.emplace_back(s.members.begin() + static_cast<std::ptrdiff_t>(start),
                       s.members.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return out;
}

RebalancePolicy parse_rebalance_policy(std::string_view text) {
  if (text == "second_smallest") return RebalancePolicy::kSecondSmallest;
  if (text == "target_count") return RebalancePolicy::kTargetCount;
  if (text == "none") return RebalancePolicy::kNone;
  throw ConfigError("unknown rebalance.policy '" + std::string(text) +
                    "' (expected second_smallest, target_count or none)");
}

std::string_view rebalance_policy_name(RebalancePolicy policy) {
  switch (policy) {
    case RebalancePolicy::kNone:
      return "none";
    case RebalancePolicy::kSecondSmallest:
      return "second_smallest";
    case RebalancePolicy::kTargetCount:
      return "target_count";
  }
  return "none";
}

RebalancePlan plan_rebalance(const StageCounts& counts,
                             const RebalanceConfig& config) {
  RebalancePlan plan;
  const auto it = std::min_element(counts.begin(), counts.end());
  plan.minority = stage_from_index(static_cast<int>(it - counts.begin()));
  plan.current = *it;
  switch (config.policy) {
    case RebalancePolicy::kNone:
      plan.target = plan.current;
      break;
    case RebalancePolicy::kSecondSmallest: {
      StageCounts sorted = counts;
      std::sort(sorted.begin(), sorted.end());
      plan.target = sorted[1];
      break;
    }
    case RebalancePolicy::kTargetCount:
      if (config.target_count == 0) {
        throw ConfigError("rebalance.policy target_count needs rebalance.target_count > 0");
      }
      plan.target = config.target_count;
      break;
  }
  plan.to_generate = plan.target > plan.current ? plan.target - plan.current : 0;
  return plan;
}

StageCounts apply_plan(StageCounts counts, const RebalancePlan& plan) {
  counts[static_cast<std::size_t>(plan.minority)] += plan.to_generate;
  return counts;
}

std::vector<LabeledEpoch> rebalance(std::vector<LabeledEpoch> training,
                                    const EpochSampler& sampler,
                                    const RebalanceConfig& config) {
  const RebalancePlan plan = plan_rebalance(count_stages(training), config);
  if (plan.to_generate == 0) return training;
  if (!sampler) {
    throw ConfigError("rebalancing " + std::string(stage_name(plan.minority)) +
                      " needs a trained generator, none was supplied");
  }
  std::vector<LabeledEpoch> made = sampler(plan.minority, plan.to_generate);
  if (made.size() != plan.to_generate) {
    throw DataError("generator returned " + std::to_string(made.size()) +
                    " epochs, " + std::to_string(plan.to_generate) + " requested");
  }
  const std::size_t length = training.empty() ? 0 : training.front().samples.size();
  const std::string recording = "generated:" + std::string(stage_name(plan.minority));
  training.reserve(training.size() + made.size());
  for (std::size_t k = 0; k < made.size(); ++k) {
    LabeledEpoch& e = made[k];
    if (e.stage != plan.minority) {
      throw DataError("generator produced a " + std::string(stage_name(e.stage)) +
                      " epoch while rebalancing " +
                      std::string(stage_name(plan.minority)));
    }
    if (length != 0 && e.samples.size() != length) {
      throw DataError("generated epoch has " + std::to_string(e.samples.size()) +
                      " samples, dataset uses " + std::to_string(length));
    }
    e.source = EpochSource::kGenerated;
    e.subject_id = "generated";
    e.recording_id = recording;
    e.index = static_cast<std::int64_t>(k);
    training.push_back(std::move(e));
  }
  return training;
}

FoldPlan make_folds(std::vector<std::string> subjects, std::size_t k,
                    double val_fraction, std::uint64_t seed) {
  std::sort(subjects.begin(), subjects.end());
  if (std::adjacent_find(subjects.begin(), subjects.end()) != subjects.end()) {
    throw ConfigError("subject list contains duplicates");
  }
  if (k < 2) throw ConfigError("k_folds must be at least 2");
  if (subjects.size() < k) {
    throw ConfigError(std::to_string(subjects.size()) + " subjects cannot fill " +
                      std::to_string(k) + " folds");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in [0, 1)");
  }
  Rng rng = make_rng(seed, "folds");
  std::shuffle(subjects.begin(), subjects.end(), rng);

  const std::size_t n = subjects.size();
  std::vector<std::vector<std::string>> groups(k);
  std::size_t pos = 0;
  for (std::size_t g = 0; g < k; ++g) {
    const std::size_t size = n / k + (g < n % k ? 1 : 0);
    groups[g].assign(subjects.begin() + static_cast<std::ptrdiff_t>(pos),
                     subjects.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }

  FoldPlan plan;
  plan.k = k;
  for (std::size_t f = 0; f < k; ++f) {
    Fold fold;
    fold.test = groups[f];
    std::vector<std::string> pool;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) pool.insert(pool.end(), groups[g].begin(), groups[g].end());
    }
    Rng vrng = make_rng(seed, "fold-validation", f);
    std::shuffle(pool.begin(), pool.end(), vrng);
    const auto n_val = static_cast<std::size_t>(
        std::ceil(val_fraction * static_cast<double>(pool.size()) - 1e-12));
    if (n_val >= pool.size()) {
      throw ConfigError("val_fraction leaves no training subjects in fold " +
                        std::to_string(f));
    }
    fold.validation.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_val));
    fold.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());
    std::sort(fold.test.begin(), fold.test.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.train.begin(), fold.train.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

void check_fold_plan(const FoldPlan& plan, std::span<const std::string> subjects) {
  const std::set<std::string> all(subjects.begin(), subjects.end());
  if (plan.folds.size() != plan.k) {
    throw DataError("fold plan declares k=" + std::to_string(plan.k) + " but holds " +
                    std::to_string(plan.folds.size()) + " folds");
  }
  std::map<std::string, int> test_hits;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const Fold& fold = plan.folds[f];
    std::map<std::string, int> role;
    auto visit = [&](const std::vector<std::string>& set, const char* name) {
      for (const auto& s : set) {
        if (!all.count(s)) {
          throw DataError("fold " + std::to_string(f) + " " + name +
                          " set names unknown subject '" + s + "'");
        }
        if (++role[s] > 1) {
          throw DataError("subject '" + s + "' appears in more than one role in fold " +
                          std::to_string(f));
        }
      }
    };
    visit(fold.train, "train");
    visit(fold.validation, "validation");
    visit(fold.test, "test");
    if (role.size() != all.size()) {
      throw DataError("fold " + std::to_string(f) + " does not cover every subject");
    }
    if (fold.train.empty() || fold.test.empty()) {
      throw DataError("fold " + std::to_string(f) + " has an empty train or test set");
    }
    for (const auto& s : fold.test) ++test_hits[s];
  }
  for (const auto& s : all) {
    if (test_hits[s] != 1) {
      throw DataError("subject '" + s + "' is tested in " +
                      std::to_string(test_hits[s]) + " folds");
    }
  }
}

std::vector<std::string> subjects_of(std::span<const LabeledEpoch> epochs) {
  std::set<std::string> s;
  for (const auto& e : epochs) {
    if (e.source == EpochSource::kReal) s.insert(e.subject_id);
  }
  return {s.begin(), s.end()};
}

std::vector<LabeledEpoch> select_subjects(std::span<const LabeledEpoch> epochs,
                                          std::span<const std::string> subjects) {
  const std::unordered_set<std::string> keep(subjects.begin(), subjects.end());
  std::vector<LabeledEpoch> out;
  for (const auto& e : epochs) {
    if (e.source == EpochSource::kReal && keep.count(e.subject_id)) out.push_back(e);
  }
  return out;
}

void check_split(std::span<const LabeledEpoch> train,
                 std::span<const LabeledEpoch> validation,
                 std::span<const LabeledEpoch> test) {
  auto real_subjects = [](std::span<const LabeledEpoch> part, const char* name) {
    std::set<std::string> s;
    for (const auto& e : part) {
      if (e.source == EpochSource::kGenerated && std::string_view(name) != "train") {
        throw DataError(std::string("generated epoch found in the ") + name + " split");
      }
      if (e.source == EpochSource::kReal) s.insert(e.subject_id);
    }
    return s;
  };
  const auto tr = real_subjects(train, "train");
  const auto va = real_subjects(validation, "validation");
  const auto te = real_subjects(test, "test");
  auto disjoint = [](const std::set<std::string>& a, const std::set<std::string>& b,
                     const char* what) {
    for (const auto& s : a) {
      if (b.count(s)) {
        throw DataError("subject '" + s + "' leaks between " + what);
      }
    }
  };
  disjoint(tr, va, "train and validation");
  disjoint(tr, te, "train and test");
  disjoint(va, te, "validation and test");
}

}  // namespace somnus::data
