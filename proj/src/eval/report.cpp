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

#include "somnus/eval/report.hpp"

#include <sstream>

#include "somnus/core/text.hpp"

namespace somnus::eval {

namespace {

std::string pct(double v) { return format_fixed(100.0 * v, 2); }

}  // namespace

std::string format_metrics_table(std::span<const NamedReport> rows) {
  std::ostringstream os;
  os << "name\tacc\tmf1\tkappa";
  for (auto name : kStageNames) os << "\tf1_" << name;
  os << "\tepochs\n";
  for (const auto& [name, r] : rows) {
    os << name << "\t" << pct(r.acc) << "\t" << pct(r.mf1) << "\t" << format_fixed(r.kappa, 4);
    for (double f : r.per_class_f1) os << "\t" << pct(f);
    os << "\t" << r.total << "\n";
  }
  return os.str();
}

std::string format_confusion(const Confusion& confusion) {
  std::ostringstream os;
  os << "truth\\pred";
  for (auto name : kStageNames) os << "\t" << name;
  os << "\n";
  for (std::size_t i = 0; i < kNumStages; ++i) {
    os << kStageNames[i];
    for (auto v : confusion[i]) os << "\t" << v;
    os << "\n";
  }
  return os.str();
}

std::string format_sweep_table(std::span<const SweepRow> rows) {
  std::vector<NamedReport> named;
  named.reserve(rows.size());
  for (const auto& r : rows) named.push_back({"M=" + std::to_string(r.m), r.report});
  return format_metrics_table(named);
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["acc"] = report.acc;
  j["mf1"] = report.mf1;
  j["kappa"] = report.kappa;
  nlohmann::ordered_json f1;
  for (std::size_t k = 0; k < kNumStages; ++k) {
    f1[std::string(kStageNames[k])] = report.per_class_f1[k];
  }
  j["per_class_f1"] = f1;
  j["total"] = report.total;
  j["confusion"] = report.confusion;
  return j;
}

}  // namespace somnus::eval
