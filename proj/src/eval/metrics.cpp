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

#include "somnus/eval/metrics.hpp"

#include <string>

#include "somnus/core/errors.hpp"

namespace somnus::eval {

Confusion confusion_matrix(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) {
    throw DataError("confusion matrix: " + std::to_string(truth.size()) + " labels vs " +
                    std::to_string(pred.size()) + " predictions");
  }
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= static_cast<int>(kNumStages) || pred[i] < 0 || pred[i] >= static_cast<int>(kNumStages)) {
      throw DataError("confusion matrix: label out of range at position " +
                      std::to_string(i));
    }
    ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  }
  return c;
}

Confusion& operator+=(Confusion& a, const Confusion& b) {
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) a[i][j] += b[i][j];
  }
  return a;
}

MetricsReport metrics(const Confusion& confusion) {
  MetricsReport r;
  r.confusion = confusion;
  std::array<double, kNumStages> row{}, col{};
  double diag = 0.0;
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) {
      const auto v = static_cast<double>(confusion[i][j]);
      row[i] += v;
      col[j] += v;
      r.total += confusion[i][j];
    }
    diag += static_cast<double>(confusion[i][i]);
  }
  if (r.total == 0) throw DataError("metrics of an empty confusion matrix");
  const auto n = static_cast<double>(r.total);
  r.acc = diag / n;

  double f1_sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < kNumStages; ++k) {
    const auto tp = static_cast<double>(confusion[k][k]);
    const double precision = col[k] > 0.0 ? tp / col[k] : 0.0;
    const double recall = row[k] > 0.0 ? tp / row[k] : 0.0;
    r.per_class_f1[k] =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    if (row[k] > 0.0 || col[k] > 0.0) {
      f1_sum += r.per_class_f1[k];
      ++present;
    }
  }
  r.mf1 = f1_sum / present;

  double pe = 0.0;
  for (std::size_t k = 0; k < kNumStages; ++k) pe += row[k] * col[k];
  pe /= n * n;
  if (pe >= 1.0) {
    r.kappa = r.acc == 1.0 ? 1.0 : 0.0;
  } else {
    r.kappa = (r.acc - pe) / (1.0 - pe);
  }
  return r;
}

}  // namespace somnus::eval
