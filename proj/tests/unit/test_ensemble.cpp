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

#include <algorithm>
#include <filesystem>
#include <random>
#include <vector>

#include "doctest.h"
#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/eval/ensemble.hpp"

using namespace somnus;
using namespace somnus::eval;
using clf::ClassProbabilities;
using clf::EpochRecord;

namespace {

EpochRecord rec(std::int64_t epoch, double acc, double mf1 = 0.5) {
  EpochRecord r;
  r.epoch = epoch;
  r.val_acc = acc;
  r.val_mf1 = mf1;
  return r;
}

std::vector<std::int64_t> epochs_of(const std::vector<EpochRecord>& rs) {
  std::vector<std::int64_t> out;
  for (const auto& r : rs) out.push_back(r.epoch);
  return out;
}

ClassProbabilities random_distribution(Rng& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  ClassProbabilities p;
  double s = 0.0;
  for (double& v : p) s += (v = u(rng));
  for (double& v : p) v /= s;
  return p;
}

// Counting oracle: a direct per-sample tally with plain averaging.
std::vector<int> naive_vote(const std::vector<std::vector<int>>& labels,
                            const std::vector<std::vector<ClassProbabilities>>& probs) {
  const std::size_t n = labels[0].size();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    std::size_t best_count = 0;
    double best_mean = -1.0;
    for (int c = 0; c < 5; ++c) {
      std::size_t count = 0;
      double mean = 0.0;
      for (std::size_t k = 0; k < labels.size(); ++k) {
        count += labels[k][i] == c;
        mean += probs[k][i][static_cast<std::size_t>(c)] / static_cast<double>(labels.size());
      }
      if (count > best_count || (count == best_count && mean > best_mean)) {
        best = c;
        best_count = count;
        best_mean = mean;
      }
    }
    out[i] = best;
  }
  return out;
}

PredictionCache random_cache(std::size_t members, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "cache");
  std::uniform_int_distribution<int> label(0, 4);
  std::bernoulli_distribution right(0.7);
  std::uniform_real_distribution<double> acc(0.6, 0.9);
  PredictionCache c;
  c.truth.resize(n);
  for (auto& t : c.truth) t = label(rng);
  for (std::size_t k = 0; k < members; ++k) {
    CachedMember m;
    m.record = rec(static_cast<std::int64_t>(k), acc(rng), acc(rng));
    m.record.file = "clf-epoch-" + std::to_string(k) + ".segk";
    for (std::size_t i = 0; i < n; ++i) {
      auto p = random_distribution(rng);
      const int l = right(rng) ? c.truth[i] : label(rng);
      p[static_cast<std::size_t>(l)] += 1.0;
      for (double& v : p) v /= 2.0;
      m.labels.push_back(clf::argmax5(p));
      m.probs.push_back(p);
    }
    c.members.push_back(std::move(m));
  }
  return c;
}

}  // namespace

TEST_SUITE("top-m selection") {
  TEST_CASE("highest validation accuracy first") {
    const std::vector<EpochRecord> bank{rec(0, 0.7), rec(1, 0.9), rec(2, 0.8)};
    CHECK(epochs_of(select_top_m(bank, 2)) == std::vector<std::int64_t>{1, 2});
    CHECK(epochs_of(select_top_m(bank, 3)) == std::vector<std::int64_t>{1, 2, 0});
    CHECK(epochs_of(select_top_m(bank, 1)) == std::vector<std::int64_t>{1});
  }

  TEST_CASE("ties go to macro F1, then to the later epoch") {
    const std::vector<EpochRecord> bank{rec(0, 0.8, 0.70), rec(1, 0.8, 0.72)};
    CHECK(epochs_of(select_top_m(bank, 1)) == std::vector<std::int64_t>{1});
    const std::vector<EpochRecord> flat{rec(3, 0.8, 0.7), rec(5, 0.8, 0.7), rec(4, 0.8, 0.7),
                                        rec(6, 0.9, 0.1)};
    CHECK(epochs_of(select_top_m(flat, 4)) == std::vector<std::int64_t>{6, 5, 4, 3});
  }

  TEST_CASE("invalid sizes") {
    const std::vector<EpochRecord> bank{rec(0, 0.7)};
    CHECK_THROWS_AS(select_top_m(bank, 0), ConfigError);
    CHECK_THROWS_AS(select_top_m(bank, 2), ConfigError);
  }

  TEST_CASE("stable under bank re-serialization") {
    clf::CheckpointBank bank;
    Rng rng = make_rng(4, "bank");
    std::uniform_int_distribution<int> q(0, 4);
    std::vector<EpochRecord> records;
    for (std::int64_t e = 0; e < 30; ++e) records.push_back(rec(e, q(rng) / 4.0, q(rng) / 3.0));
    std::string text = "epoch\tval_acc\tval_mf1\ttrain_loss\ttrain_acc\tfile\n";
    for (const auto& r : records) {
      text += std::to_string(r.epoch) + "\t" + std::to_string(r.val_acc) + "\t" +
              std::to_string(r.val_mf1) + "\t0\t0\tx\n";
    }
    const auto reread = clf::CheckpointBank::parse_index(text);
    for (std::size_t m = 1; m <= 30; ++m) {
      CHECK(epochs_of(select_top_m(records, m)) == epochs_of(select_top_m(reread, m)));
    }
  }
}

TEST_SUITE("majority vote") {
  const ClassProbabilities kFlat{0.2, 0.2, 0.2, 0.2, 0.2};

  TEST_CASE("strict majority") {
    const std::vector<std::vector<int>> labels{{0}, {0}, {1}};
    const std::vector<std::vector<ClassProbabilities>> probs(3, {kFlat});
    CHECK(majority_vote(labels, probs) == std::vector<int>{0});
  }

  TEST_CASE("tied counts use mean probability") {
    const std::vector<std::vector<int>> labels{{0}, {1}};
    const std::vector<std::vector<ClassProbabilities>> probs{
        {{0.6, 0.4, 0.0, 0.0, 0.0}}, {{0.3, 0.7, 0.0, 0.0, 0.0}}};
    // Mean W 0.45, mean N1 0.55.
    CHECK(majority_vote(labels, probs) == std::vector<int>{1});
  }

  TEST_CASE("residual ties go to the lowest stage") {
    const std::vector<std::vector<int>> labels{{3}, {1}};
    const std::vector<std::vector<ClassProbabilities>> probs{{kFlat}, {kFlat}};
    CHECK(majority_vote(labels, probs) == std::vector<int>{1});
  }

  TEST_CASE("single member is the identity") {
    Rng rng = make_rng(2, "single");
    std::uniform_int_distribution<int> label(0, 4);
    std::vector<std::vector<int>> labels(1);
    std::vector<std::vector<ClassProbabilities>> probs(1);
    for (int i = 0; i < 200; ++i) {
      labels[0].push_back(label(rng));
      probs[0].push_back(random_distribution(rng));
    }
    CHECK(majority_vote(labels, probs) == labels[0]);
  }

  TEST_CASE("matches the counting oracle on random vote matrices") {
    Rng rng = make_rng(9, "vote-oracle");
    std::uniform_int_distribution<int> label(0, 4);
    std::uniform_int_distribution<int> narrow(0, 2);
    std::size_t mismatches = 0, perm_mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<std::vector<int>> labels(10);
      std::vector<std::vector<ClassProbabilities>> probs(10);
      const bool few = trial % 2 == 0;  // fewer labels, more tied counts
      for (std::size_t k = 0; k < 10; ++k) {
        for (int i = 0; i < 100; ++i) {
          labels[k].push_back(few ? narrow(rng) : label(rng));
          probs[k].push_back(random_distribution(rng));
        }
      }
      const auto voted = majority_vote(labels, probs);
      mismatches += voted != naive_vote(labels, probs);
      std::vector<std::size_t> order(10);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<std::vector<int>> pl;
      std::vector<std::vector<ClassProbabilities>> pp;
      for (std::size_t k : order) {
        pl.push_back(labels[k]);
        pp.push_back(probs[k]);
      }
      perm_mismatches += majority_vote(pl, pp) != voted;
    }
    CHECK(mismatches == 0);
    CHECK(perm_mismatches == 0);
  }

  TEST_CASE("inconsistent members") {
    const ClassProbabilities p = kFlat;
    const std::vector<std::vector<int>> labels{{0, 1}, {0}};
    const std::vector<std::vector<ClassProbabilities>> probs{{p, p}, {p}};
    CHECK_THROWS_AS(majority_vote(labels, probs), DataError);
    CHECK_THROWS_AS(majority_vote(std::vector<std::vector<int>>{},
                                  std::vector<std::vector<ClassProbabilities>>{}),
                    DataError);
    const std::vector<std::vector<int>> bad{{7}};
    CHECK_THROWS_AS(majority_vote(bad, std::vector<std::vector<ClassProbabilities>>{{p}}),
                    DataError);
  }
}

TEST_SUITE("prediction cache") {
  TEST_CASE("binary round trip") {
    const auto cache = random_cache(4, 37, 1);
    CHECK(decode_prediction_cache(encode_prediction_cache(cache)) == cache);
  }

  TEST_CASE("corruption is detected") {
    auto bytes = encode_prediction_cache(random_cache(2, 5, 1));
    auto cut = bytes;
    cut.resize(cut.size() - 3);
    CHECK_THROWS_AS(decode_prediction_cache(cut), DataError);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(decode_prediction_cache(extra), DataError);
    auto bad_label = bytes;
    bad_label[4 + 4 + 8 + 4] = 9;
    CHECK_THROWS_AS(decode_prediction_cache(bad_label), DataError);
    bytes[0] = 'X';
    CHECK_THROWS_AS(decode_prediction_cache(bytes), DataError);
  }

  TEST_CASE("files and index") {
    const auto dir = std::filesystem::temp_directory_path() / "somnus-cache-test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto cache = random_cache(3, 10, 2);
    save_prediction_cache(dir / "fold-00.segp", cache);
    CHECK(load_prediction_cache(dir / "fold-00.segp") == cache);
    const std::string index = read_text_file(dir / "fold-00.tsv");
    CHECK(index.rfind("rank\tepoch", 0) == 0);
    CHECK(std::count(index.begin(), index.end(), '\n') == 4);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("top-m voting reads the ranking") {
    const auto cache = random_cache(10, 50, 3);
    const auto top = select_top_m(
        [&] {
          std::vector<EpochRecord> r;
          for (const auto& m : cache.members) r.push_back(m.record);
          return r;
        }(),
        1);
    const auto& best = *std::find_if(cache.members.begin(), cache.members.end(),
                                     [&](const auto& m) { return m.record == top[0]; });
    CHECK(ensemble_labels(cache, 1) == best.labels);
    CHECK_THROWS_AS(ensemble_labels(cache, 11), ConfigError);
  }
}

TEST_SUITE("sensitivity sweep") {
  const std::vector<std::size_t> kSizes{5, 6, 7, 8, 9, 10};

  TEST_CASE("one row per size and the last row equals the full vote") {
    const std::vector<PredictionCache> caches{random_cache(10, 80, 1), random_cache(10, 60, 2)};
    const auto rows = sensitivity_sweep(caches, kSizes);
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(rows[i].m == kSizes[i]);
    Confusion pooled{};
    for (const auto& c : caches) pooled += confusion_matrix(c.truth, ensemble_labels(c, 10));
    CHECK(rows.back().report == metrics(pooled));
    CHECK(rows.back().report.total == 140);
  }

  TEST_CASE("identical members give identical rows") {
    auto cache = random_cache(1, 40, 5);
    for (int k = 1; k < 10; ++k) {
      auto m = cache.members[0];
      m.record.epoch = k;
      cache.members.push_back(m);
    }
    const std::vector<PredictionCache> caches{cache};
    const auto rows = sensitivity_sweep(caches, kSizes);
    for (const auto& r : rows) CHECK(r.report == rows[0].report);
    CHECK(sweep_spread(rows) == 0.0);
  }

  TEST_CASE("cache smaller than the largest size") {
    const std::vector<PredictionCache> caches{random_cache(8, 10, 1)};
    CHECK_THROWS_AS(sensitivity_sweep(caches, kSizes), DataError);
  }

  TEST_CASE("vote simulation bounds the sweep") {
    const std::vector<PredictionCache> caches{random_cache(10, 120, 7), random_cache(10, 90, 8)};
    const auto sim = simulate_votes(caches, 5, 10);
    CHECK(sim.subsets == 252 + 210 + 120 + 45 + 10 + 1);
    const auto rows = sensitivity_sweep(caches, kSizes);
    CHECK(sweep_spread(rows) <= sim.spread());
    for (const auto& r : rows) {
      CHECK(r.report.acc >= sim.min_acc);
      CHECK(r.report.acc <= sim.max_acc);
    }
    // Independent enumeration over bit masks.
    double lo = 1.0, hi = 0.0;
    for (unsigned mask = 0; mask < 1024; ++mask) {
      const int bits = __builtin_popcount(mask);
      if (bits < 5) continue;
      std::size_t hit = 0, total = 0;
      for (const auto& c : caches) {
        std::vector<const CachedMember*> ranked;
        for (const auto& m : c.members) ranked.push_back(&m);
        std::stable_sort(ranked.begin(), ranked.end(), [](auto* a, auto* b) {
          if (a->record.val_acc != b->record.val_acc) return a->record.val_acc > b->record.val_acc;
          if (a->record.val_mf1 != b->record.val_mf1) return a->record.val_mf1 > b->record.val_mf1;
          return a->record.epoch > b->record.epoch;
        });
        std::vector<std::vector<int>> labels;
        std::vector<std::vector<ClassProbabilities>> probs;
        for (unsigned i = 0; i < 10; ++i) {
          if (mask & (1u << i)) {
            labels.push_back(ranked[i]->labels);
            probs.push_back(ranked[i]->probs);
          }
        }
        const auto pred = naive_vote(labels, probs);
        for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == c.truth[i];
        total += pred.size();
      }
      const double acc = static_cast<double>(hit) / static_cast<double>(total);
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
    }
    CHECK(sim.min_acc == lo);
    CHECK(sim.max_acc == hi);
  }

  TEST_CASE("simulation argument checks") {
    const std::vector<PredictionCache> uneven{random_cache(10, 10, 1), random_cache(9, 10, 2)};
    CHECK_THROWS_AS(simulate_votes(uneven, 5, 9), DataError);
    const std::vector<PredictionCache> caches{random_cache(6, 10, 1)};
    CHECK_THROWS_AS(simulate_votes(caches, 5, 7), ConfigError);
    CHECK_THROWS_AS(simulate_votes(caches, 0, 3), ConfigError);
  }
}
