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
#include <span>
#include <vector>

#include "somnus/core/stage.hpp"

namespace somnus::eval {

using Confusion = std::array<std::array<std::uint64_t, kNumStages>, kNumStages>;

// Entry (i, j) counts samples of true stage i predicted as j. Labels outside
// 0..4 and length mismatches are DataErrors.
Confusion confusion_matrix(std::span<const int> truth, std::span<const int> pred);

Confusion& operator+=(Confusion& a, const Confusion& b);

struct MetricsReport {
  Confusion confusion{};
  std::uint64_t total = 0;
  double acc = 0.0;
  double mf1 = 0.0;
  double kappa = 0.0;
  std::array<double, kNumStages> per_class_f1{};

  bool operator==(const MetricsReport&) const = default;
};

// Accuracy, per-class F1 (0 when precision + recall is 0), macro F1 and
// Cohen's kappa. The macro average runs over stages that occur in the truth
// or the predictions, which is all five for any realistic evaluation. An
// all-zero matrix is a DataError.
MetricsReport metrics(const Confusion& confusion);

inline MetricsReport metrics(std::span<const int> truth, std::span<const int> pred) {
  return metrics(confusion_matrix(truth, pred));
}

}  // namespace somnus::eval
