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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "somnus/data/epoch.hpp"

namespace somnus::gan {

// Frequency (Hz) of the largest non-DC magnitude in the real FFT of `signal`;
// the lowest bin wins ties. Zero for signals shorter than two samples.
double dominant_frequency(std::span<const double> signal, double sampling_rate);
double dominant_frequency(std::span<const float> signal, double sampling_rate);

struct SetSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double envelope_mean = 0.0;  // per-epoch peak |x|, averaged
  double envelope_std = 0.0;
  double rms_mean = 0.0;
  double dominant_mean_hz = 0.0;
  std::vector<double> dominant_histogram;  // probability per bin

  bool operator==(const SetSummary&) const = default;
};

// Quantitative stand-in for eyeballing real and generated epochs side by side.
struct Diagnostics {
  double sampling_rate = 0.0;
  double bin_width_hz = 1.0;
  SetSummary real;
  SetSummary generated;
  double js_divergence = 0.0;  // base-2, between the dominant-frequency histograms
  std::vector<std::vector<double>> real_traces;
  std::vector<std::vector<double>> generated_traces;

  bool operator==(const Diagnostics&) const = default;
};

SetSummary summarize(std::span<const LabeledEpoch> epochs, double sampling_rate,
                     double bin_width_hz);

// Jensen-Shannon divergence in bits; inputs are normalized first.
double js_divergence(std::span<const double> p, std::span<const double> q);

Diagnostics compute_diagnostics(std::span<const LabeledEpoch> real,
                                std::span<const LabeledEpoch> generated,
                                double sampling_rate, std::size_t traces = 4,
                                double bin_width_hz = 1.0);

// Tab-separated text, one record per line:
//   scalar <tab> key <tab> value
//   summary <tab> real|generated <tab> field <tab> value
//   hist <tab> real|generated <tab> bin_low_hz <tab> probability
//   trace <tab> real|generated <tab> k <tab> comma-separated samples
// Numbers use the shortest form that round-trips exactly.
std::string format_diagnostics(const Diagnostics& diagnostics);
Diagnostics parse_diagnostics(std::string_view text);

// Column-per-trace TSV for plotting: header "t_sec real_0 ... generated_0 ...".
std::string format_traces(const Diagnostics& diagnostics);

}  // namespace somnus::gan
