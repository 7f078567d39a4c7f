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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "somnus/core/errors.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/eval/metrics.hpp"

using namespace somnus;
using namespace somnus::eval;

namespace {

Confusion embed(std::initializer_list<std::initializer_list<std::uint64_t>> rows) {
  Confusion c{};
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (auto v : row) c[i][j++] = v;
    ++i;
  }
  return c;
}

// Sample-level oracle: expands the matrix into label pairs and counts
// agreements, hits and misses one sample at a time.
struct NaiveReport {
  double acc, mf1, kappa;
  std::array<double, kNumStages> f1;
};

NaiveReport naive(const Confusion& c) {
  std::vector<int> truth, pred;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      for (std::uint64_t n = 0; n < c[i][j]; ++n) {
        truth.push_back(i);
        pred.push_back(j);
      }
    }
  }
  const double n = static_cast<double>(truth.size());
  NaiveReport r{};
  double agree = 0.0;
  for (std::size_t s = 0; s < truth.size(); ++s) agree += truth[s] == pred[s];
  r.acc = agree / n;
  double pe = 0.0, f1_sum = 0.0;
  int present = 0;
  for (int k = 0; k < 5; ++k) {
    double tp = 0, fp = 0, fn = 0, in_truth = 0, in_pred = 0;
    for (std::size_t s = 0; s < truth.size(); ++s) {
      if (truth[s] == k && pred[s] == k) tp += 1;
      if (truth[s] != k && pred[s] == k) fp += 1;
      if (truth[s] == k && pred[s] != k) fn += 1;
      in_truth += truth[s] == k;
      in_pred += pred[s] == k;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    r.f1[k] = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
    if (in_truth + in_pred > 0) {
      f1_sum += r.f1[k];
      ++present;
    }
    pe += (in_truth / n) * (in_pred / n);
  }
  r.mf1 = f1_sum / present;
  r.kappa = pe == 1.0 ? 1.0 : (r.acc - pe) / (1.0 - pe);
  return r;
}

}  // namespace

TEST_SUITE("confusion matrix") {
  TEST_CASE("identity predictions fill the diagonal") {
    const std::vector<int> t{0, 1, 2, 3, 4, 2, 2};
    const Confusion c = confusion_matrix(t, t);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (i != j) CHECK(c[i][j] == 0);
      }
    }
    CHECK(c[2][2] == 3);
  }

  TEST_CASE("single sample") {
    const Confusion c = confusion_matrix(std::vector<int>{0}, std::vector<int>{2});
    CHECK(c[0][2] == 1);
  }

  TEST_CASE("row sums count the truth") {
    Rng rng = make_rng(3, "confusion");
    std::uniform_int_distribution<int> label(0, 4);
    std::vector<int> t(500), p(500);
    for (auto& v : t) v = label(rng);
    for (auto& v : p) v = label(rng);
    const Confusion c = confusion_matrix(t, p);
    for (int k = 0; k < 5; ++k) {
      std::uint64_t row = 0, col = 0;
      for (int j = 0; j < 5; ++j) {
        row += c[k][j];
        col += c[j][k];
      }
      CHECK(row == static_cast<std::uint64_t>(std::count(t.begin(), t.end(), k)));
      CHECK(col == static_cast<std::uint64_t>(std::count(p.begin(), p.end(), k)));
    }
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(confusion_matrix(std::vector<int>{0, 1}, std::vector<int>{0}), DataError);
    CHECK_THROWS_AS(confusion_matrix(std::vector<int>{5}, std::vector<int>{0}), DataError);
    CHECK_THROWS_AS(confusion_matrix(std::vector<int>{0}, std::vector<int>{-1}), DataError);
  }

  TEST_CASE("accumulation") {
    Confusion a = embed({{1, 2}, {3, 4}});
    a += embed({{1, 0}, {0, 1}});
    CHECK(a[0][0] == 2);
    CHECK(a[1][1] == 5);
    CHECK(a[0][1] == 2);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("kappa on a binary-style matrix") {
    const auto r = metrics(embed({{50, 10}, {10, 30}}));
    CHECK(r.acc == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(r.kappa == doctest::Approx(0.28 / 0.48).epsilon(1e-12));
    CHECK(std::abs(r.kappa - 0.5833) < 5e-5);
    CHECK(r.total == 100);
  }

  TEST_CASE("macro F1 on a two-class matrix") {
    const auto r = metrics(embed({{2, 0}, {1, 1}}));
    CHECK(r.per_class_f1[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.per_class_f1[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.mf1 == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(std::abs(r.mf1 - 0.7333) < 5e-5);
  }

  TEST_CASE("perfect diagonal") {
    const auto r = metrics(embed({{5, 0, 0}, {0, 3, 0}, {0, 0, 9}}));
    CHECK(r.acc == 1.0);
    CHECK(r.mf1 == 1.0);
    CHECK(r.kappa == 1.0);
    const auto single = metrics(embed({{7}}));
    CHECK(single.kappa == 1.0);
    CHECK(single.mf1 == 1.0);
  }

  TEST_CASE("empty matrix is a data error") {
    CHECK_THROWS_AS(metrics(Confusion{}), DataError);
  }

  TEST_CASE("agrees with the sample-level oracle on random matrices") {
    Rng rng = make_rng(11, "metric-oracle");
    std::uniform_int_distribution<std::uint64_t> count(0, 40);
    std::bernoulli_distribution sparse(0.15);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      Confusion c{};
      std::uint64_t total = 0;
      for (auto& row : c) {
        for (auto& v : row) {
          v = sparse(rng) ? 0 : count(rng);
          total += v;
        }
      }
      if (total == 0) c[0][0] = 1;
      const auto r = metrics(c);
      const auto o = naive(c);
      worst = std::max({worst, std::abs(r.acc - o.acc), std::abs(r.mf1 - o.mf1),
                        std::abs(r.kappa - o.kappa)});
      for (int k = 0; k < 5; ++k) worst = std::max(worst, std::abs(r.per_class_f1[k] - o.f1[k]));
      CHECK(r.kappa >= -1.0);
      CHECK(r.kappa <= 1.0);
    }
    CHECK(worst <= 1e-12);
  }
}
