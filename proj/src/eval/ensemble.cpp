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

#include "somnus/eval/ensemble.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/text.hpp"

namespace somnus::eval {

namespace {

constexpr std::uint32_t kCacheVersion = 1;
constexpr std::uint64_t kMaxSimulatedSubsets = 1'000'000;

bool ranks_before(const clf::EpochRecord& a, const clf::EpochRecord& b) {
  if (a.val_acc != b.val_acc) return a.val_acc > b.val_acc;
  if (a.val_mf1 != b.val_mf1) return a.val_mf1 > b.val_mf1;
  return a.epoch > b.epoch;
}

// Members ordered best first by the selection rule.
std::vector<const CachedMember*> ranked_members(const PredictionCache& cache) {
  std::vector<const CachedMember*> out;
  out.reserve(cache.members.size());
  for (const auto& m : cache.members) out.push_back(&m);
  std::stable_sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return ranks_before(a->record, b->record);
  });
  return out;
}

std::vector<int> vote_members(std::span<const CachedMember* const> members) {
  std::vector<std::vector<int>> labels;
  std::vector<std::vector<clf::ClassProbabilities>> probs;
  labels.reserve(members.size());
  probs.reserve(members.size());
  for (const auto* m : members) {
    labels.push_back(m->labels);
    probs.push_back(m->probs);
  }
  return majority_vote(labels, probs);
}

double accuracy(std::span<const int> truth, std::span<const int> pred) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_cache(const PredictionCache& cache) {
  for (const auto& m : cache.members) {
    if (m.labels.size() != cache.truth.size() || m.probs.size() != cache.truth.size()) {
      throw DataError("cached member of epoch " + std::to_string(m.record.epoch) +
                      " covers " + std::to_string(m.labels.size()) + " samples, truth has " +
                      std::to_string(cache.truth.size()));
    }
  }
}

}  // namespace

std::vector<clf::EpochRecord> select_top_m(std::span<const clf::EpochRecord> records,
                                           std::size_t m) {
  if (m == 0) throw ConfigError("ensemble size M must be at least 1");
  if (m > records.size()) {
    throw ConfigError("ensemble size M = " + std::to_string(m) + " exceeds the " +
                      std::to_string(records.size()) + " checkpoints in the bank");
  }
  std::vector<clf::EpochRecord> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(), ranks_before);
  sorted.resize(m);
  return sorted;
}

std::vector<int> majority_vote(std::span<const std::vector<int>> labels,
                               std::span<const std::vector<clf::ClassProbabilities>> probs) {
  if (labels.empty()) throw DataError("majority vote needs at least one member");
  if (probs.size() != labels.size()) {
    throw DataError("majority vote: " + std::to_string(labels.size()) + " label sets but " +
                    std::to_string(probs.size()) + " probability sets");
  }
  const std::size_t n = labels[0].size();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k].size() != n || probs[k].size() != n) {
      throw DataError("majority vote: member " + std::to_string(k) +
                      " predicted a different number of samples");
    }
  }
  std::vector<int> out(n);
  std::vector<double> column(labels.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::array<std::size_t, kNumStages> counts{};
    for (const auto& member : labels) {
      const int l = member[i];
      if (l < 0 || l >= static_cast<int>(kNumStages)) {
        throw DataError("majority vote: label " + std::to_string(l) + " out of range");
      }
      ++counts[static_cast<std::size_t>(l)];
    }
    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    int best = -1;
    double best_mass = 0.0;
    for (std::size_t c = 0; c < kNumStages; ++c) {
      if (counts[c] != top) continue;
      for (std::size_t k = 0; k < probs.size(); ++k) column[k] = probs[k][i][c];
      std::sort(column.begin(), column.end());
      const double mass = std::accumulate(column.begin(), column.end(), 0.0);
      if (best < 0 || mass > best_mass) {
        best = static_cast<int>(c);
        best_mass = mass;
      }
    }
    out[i] = best;
  }
  return out;
}

PredictionCache build_prediction_cache(const clf::CheckpointBank& bank,
                                       std::span<const clf::EpochRecord> records,
                                       std::span<const LabeledEpoch> epochs,
                                       std::size_t sequence_length) {
  if (epochs.empty()) throw DataError("cannot cache predictions for an empty test set");
  PredictionCache cache;
  cache.truth.reserve(epochs.size());
  for (const auto& e : epochs) cache.truth.push_back(stage_index(e.stage));
  for (const auto& rec : records) {
    const clf::Classifier member = clf::load_classifier(bank.load(rec.epoch));
    CachedMember m;
    m.record = rec;
    m.probs = clf::infer_probabilities(member, epochs, sequence_length);
    m.labels.reserve(m.probs.size());
    for (const auto& p : m.probs) m.labels.push_back(clf::argmax5(p));
    cache.members.push_back(std::move(m));
  }
  return cache;
}

std::vector<int> ensemble_labels(const PredictionCache& cache, std::size_t m) {
  check_cache(cache);
  if (m == 0 || m > cache.members.size()) {
    throw ConfigError("ensemble size M = " + std::to_string(m) + " needs between 1 and " +
                      std::to_string(cache.members.size()) + " cached members");
  }
  const auto ranked = ranked_members(cache);
  return vote_members(std::span(ranked).first(m));
}

std::vector<std::uint8_t> encode_prediction_cache(const PredictionCache& cache) {
  check_cache(cache);
  ByteWriter w;
  w.raw("SEGP");
  w.u32(kCacheVersion);
  w.u64(cache.truth.size());
  w.u32(static_cast<std::uint32_t>(cache.members.size()));
  for (int t : cache.truth) w.u8(static_cast<std::uint8_t>(t));
  for (const auto& m : cache.members) {
    w.i64(m.record.epoch);
    w.f64(m.record.train_loss);
    w.f64(m.record.train_acc);
    w.f64(m.record.val_acc);
    w.f64(m.record.val_mf1);
    w.str(m.record.file);
    for (int l : m.labels) w.u8(static_cast<std::uint8_t>(l));
    for (const auto& p : m.probs) {
      for (double v : p) w.f64(v);
    }
  }
  return w.take();
}

PredictionCache decode_prediction_cache(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("SEGP", "prediction cache");
  const std::uint32_t version = r.u32();
  if (version != kCacheVersion) {
    throw DataError("unsupported prediction cache version " + std::to_string(version));
  }
  const std::uint64_t n = r.u64();
  const std::uint32_t members = r.u32();
  if (n > r.remaining()) throw DataError("prediction cache is truncated");
  auto label = [&r] {
    const std::uint8_t v = r.u8();
    if (v >= kNumStages) {
      throw DataError("prediction cache label " + std::to_string(v) + " at byte " +
                      std::to_string(r.offset() - 1) + " is out of range");
    }
    return static_cast<int>(v);
  };
  PredictionCache cache;
  cache.truth.resize(n);
  for (auto& t : cache.truth) t = label();
  for (std::uint32_t k = 0; k < members; ++k) {
    CachedMember m;
    m.record.epoch = r.i64();
    m.record.train_loss = r.f64();
    m.record.train_acc = r.f64();
    m.record.val_acc = r.f64();
    m.record.val_mf1 = r.f64();
    m.record.file = r.str();
    m.labels.resize(n);
    for (auto& l : m.labels) l = label();
    m.probs.resize(n);
    for (auto& p : m.probs) {
      for (double& v : p) v = r.f64();
    }
    cache.members.push_back(std::move(m));
  }
  if (r.remaining() != 0) {
    throw DataError("prediction cache has " + std::to_string(r.remaining()) +
                    " trailing bytes");
  }
  return cache;
}

std::string prediction_cache_index(const PredictionCache& cache) {
  std::ostringstream os;
  os << "rank\tepoch\tval_acc\tval_mf1\ttest_acc\tfile\n";
  const auto ranked = ranked_members(cache);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& m = *ranked[i];
    os << i + 1 << "\t" << m.record.epoch << "\t" << format_double(m.record.val_acc) << "\t"
       << format_double(m.record.val_mf1) << "\t"
       << format_double(accuracy(cache.truth, m.labels)) << "\t" << m.record.file << "\n";
  }
  return os.str();
}

void save_prediction_cache(const std::filesystem::path& path, const PredictionCache& cache) {
  write_file(path, encode_prediction_cache(cache));
  auto index = path;
  index.replace_extension(".tsv");
  write_text_file(index, prediction_cache_index(cache));
}

PredictionCache load_prediction_cache(const std::filesystem::path& path) {
  return decode_prediction_cache(read_file(path));
}

std::vector<SweepRow> sensitivity_sweep(std::span<const PredictionCache> caches,
                                        std::span<const std::size_t> sizes) {
  if (caches.empty()) throw DataError("sensitivity sweep needs at least one cache");
  std::vector<SweepRow> rows;
  for (std::size_t m : sizes) {
    for (const auto& c : caches) {
      if (c.members.size() < m) {
        throw DataError("cache holds " + std::to_string(c.members.size()) +
                        " members, sweep needs " + std::to_string(m));
      }
    }
    Confusion pooled{};
    for (const auto& c : caches) pooled += confusion_matrix(c.truth, ensemble_labels(c, m));
    rows.push_back({m, metrics(pooled)});
  }
  return rows;
}

VoteSimulation simulate_votes(std::span<const PredictionCache> caches, std::size_t min_m,
                              std::size_t max_m) {
  if (caches.empty()) throw DataError("vote simulation needs at least one cache");
  const std::size_t k = caches[0].members.size();
  for (const auto& c : caches) {
    check_cache(c);
    if (c.members.size() != k) {
      throw DataError("vote simulation needs caches with equal member counts");
    }
  }
  if (min_m == 0 || min_m > max_m || max_m > k) {
    throw ConfigError("vote simulation sizes must satisfy 1 <= min <= max <= " +
                      std::to_string(k));
  }
  std::uint64_t total = 0;
  for (std::size_t m = min_m; m <= max_m; ++m) total += binomial(k, m);
  if (total > kMaxSimulatedSubsets) {
    throw ConfigError("vote simulation over " + std::to_string(k) +
                      " members would enumerate too many subsets");
  }
  std::vector<std::vector<const CachedMember*>> ranked;
  std::size_t samples = 0;
  for (const auto& c : caches) {
    ranked.push_back(ranked_members(c));
    samples += c.truth.size();
  }
  if (samples == 0) throw DataError("vote simulation needs cached test samples");
  VoteSimulation sim;
  sim.min_acc = 1.0;
  sim.max_acc = 0.0;
  std::vector<const CachedMember*> chosen;
  for (std::size_t m = min_m; m <= max_m; ++m) {
    // Subsets of rank positions, enumerated via a selection mask.
    std::vector<bool> mask(k, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(m), true);
    do {
      std::size_t hit = 0;
      for (std::size_t c = 0; c < caches.size(); ++c) {
        chosen.clear();
        for (std::size_t i = 0; i < k; ++i) {
          if (mask[i]) chosen.push_back(ranked[c][i]);
        }
        const auto pred = vote_members(chosen);
        for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == caches[c].truth[i];
      }
      const double acc = static_cast<double>(hit) / static_cast<double>(samples);
      sim.min_acc = std::min(sim.min_acc, acc);
      sim.max_acc = std::max(sim.max_acc, acc);
      ++sim.subsets;
    } while (std::prev_permutation(mask.begin(), mask.end()));
  }
  return sim;
}

double sweep_spread(std::span<const SweepRow> rows) {
  if (rows.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.report.acc < b.report.acc;
  });
  return hi->report.acc - lo->report.acc;
}

}  // namespace somnus::eval
