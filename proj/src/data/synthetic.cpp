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

#include "somnus/data/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "somnus/core/errors.hpp"
#include "somnus/core/rng.hpp"

namespace somnus::data {

std::vector<LabeledEpoch> make_spectral_corpus(const SpectralCorpusConfig& config,
                                               std::uint64_t seed) {
  const double exact = config.sampling_rate * config.epoch_seconds;
  if (!(exact >= 1.0) || std::abs(exact - std::round(exact)) > 1e-9) {
    throw ConfigError("synthetic epoch length is not a whole number of samples");
  }
  if (!(config.stay_probability >= 0.0 && config.stay_probability < 1.0)) {
    throw ConfigError("synthetic stay probability must lie in [0, 1)");
  }
  const auto length = static_cast<std::size_t>(std::llround(exact));
  std::discrete_distribution<int> share(config.stage_share.begin(),
                                        config.stage_share.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<LabeledEpoch> out;
  out.reserve(config.subjects * config.epochs_per_subject);
  for (std::size_t s = 0; s < config.subjects; ++s) {
    Rng rng = make_rng(seed, "synthetic-subject", s);
    char name[32];
    std::snprintf(name, sizeof(name), "SYN%03zu", s);
    const double gain = 1.0 + config.subject_gain_jitter * (2.0 * unit(rng) - 1.0);
    std::array<double, kNumStages> freq{};
    for (std::size_t c = 0; c < kNumStages; ++c) {
      freq[c] = config.frequency_hz[c] *
                (1.0 + config.frequency_jitter * (2.0 * unit(rng) - 1.0));
    }
    int stage = share(rng);
    for (std::size_t i = 0; i < config.epochs_per_subject; ++i) {
      if (i > 0 && unit(rng) >= config.stay_probability) stage = share(rng);
      LabeledEpoch e;
      e.stage = stage_from_index(stage);
      e.subject_id = name;
      e.recording_id = name;
      e.index = static_cast<std::int64_t>(i);
      e.samples.resize(length);
      const double ph = phase(rng);
      const double w = 2.0 * std::numbers::pi * freq[static_cast<std::size_t>(stage)] /
                       config.sampling_rate;
      for (std::size_t t = 0; t < length; ++t) {
        const double v = config.amplitude * gain * std::sin(w * static_cast<double>(t) + ph) +
                         config.noise * gauss(rng);
        e.samples[t] = static_cast<float>(v);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<LabeledEpoch> make_sinusoid_epochs(const SinusoidConfig& config,
                                               std::uint64_t seed) {
  const double peak = config.amplitude * (1.0 + config.amplitude_jitter);
  if (peak > 1.0) throw ConfigError("sinusoid amplitude would leave [-1, 1]");
  Rng rng = make_rng(seed, "sinusoid");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<LabeledEpoch> out;
  out.reserve(config.count);
  const double w = 2.0 * std::numbers::pi * config.frequency_hz / config.sampling_rate;
  for (std::size_t i = 0; i < config.count; ++i) {
    LabeledEpoch e;
    e.stage = config.stage;
    e.subject_id = "sinusoid";
    e.recording_id = "sinusoid";
    e.index = static_cast<std::int64_t>(i);
    const double amp =
        config.amplitude * (1.0 + config.amplitude_jitter * (2.0 * unit(rng) - 1.0));
    const double ph = 2.0 * std::numbers::pi * unit(rng);
    e.samples.resize(config.epoch_length);
    for (std::size_t t = 0; t < config.epoch_length; ++t) {
      e.samples[t] = static_cast<float>(amp * std::sin(w * static_cast<double>(t) + ph));
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace somnus::data
