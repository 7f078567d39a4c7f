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
#include <cstdint>
#include <vector>

#include "somnus/core/stage.hpp"
#include "somnus/data/epoch.hpp"

namespace somnus::data {

// A labeled corpus where each stage is a sinusoid at its own frequency.
// Stages follow a sticky Markov chain whose stationary distribution is
// `stage_share`; every subject is one contiguous recording.
struct SpectralCorpusConfig {
  std::size_t subjects = 20;
  std::size_t epochs_per_subject = 100;
  double sampling_rate = 64.0;
  double epoch_seconds = 4.0;
  std::array<double, kNumStages> frequency_hz{2.0, 5.0, 9.0, 14.0, 20.0};
  std::array<double, kNumStages> stage_share{0.231, 0.063, 0.403, 0.129, 0.175};
  double stay_probability = 0.8;
  double amplitude = 50.0;           // physical units
  double subject_gain_jitter = 0.2;  // relative, per subject
  double frequency_jitter = 0.03;    // relative, per subject and stage
  double noise = 5.0;                // white-noise standard deviation
};

std::vector<LabeledEpoch> make_spectral_corpus(const SpectralCorpusConfig& config,
                                               std::uint64_t seed);

// Single-stage sinusoid epochs with random phase and amplitude jitter, already
// inside [-1, 1].
struct SinusoidConfig {
  std::size_t count = 512;
  double sampling_rate = 64.0;
  std::size_t epoch_length = 256;
  double frequency_hz = 4.0;
  double amplitude = 0.8;
  double amplitude_jitter = 0.1;  // relative, uniform
  Stage stage = Stage::kN1;
};

std::vector<LabeledEpoch> make_sinusoid_epochs(const SinusoidConfig& config,
                                               std::uint64_t seed);

}  // namespace somnus::data
