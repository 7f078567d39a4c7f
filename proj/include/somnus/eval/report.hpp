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

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "somnus/eval/ensemble.hpp"
#include "somnus/eval/metrics.hpp"

namespace somnus::eval {

struct NamedReport {
  std::string name;
  MetricsReport report;
};

// Tab-separated table: name, Acc and MF1 in percent, kappa, per-stage F1 in
// percent (W, N1, N2, N3, REM), and the number of scored epochs.
std::string format_metrics_table(std::span<const NamedReport> rows);

// Tab-separated confusion matrix with stage names on both axes.
std::string format_confusion(const Confusion& confusion);

// Sweep rows in the same layout, named "M=<m>".
std::string format_sweep_table(std::span<const SweepRow> rows);

nlohmann::ordered_json to_json(const MetricsReport& report);

}  // namespace somnus::eval
