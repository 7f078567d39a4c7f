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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "somnus/core/stage.hpp"

namespace somnus {

enum class EpochSource : std::uint8_t { kReal = 0, kGenerated = 1 };

// One scored window of single-channel EEG. Samples are stored as 32-bit
// floats; networks widen them to double when batches are assembled.
struct LabeledEpoch {
  std::vector<float> samples;
  Stage stage = Stage::kW;
  std::string subject_id;
  EpochSource source = EpochSource::kReal;
  std::string recording_id;
  std::int64_t index = 0;  // position on the recording's epoch grid

  bool operator==(const LabeledEpoch&) const = default;
};

// A dataset of epochs sharing one sampling rate and epoch length.
struct EpochStore {
  double sampling_rate = 0.0;
  double epoch_seconds = 30.0;
  std::string channel;
  std::vector<LabeledEpoch> epochs;

  std::size_t epoch_samples() const;
  bool operator==(const EpochStore&) const = default;
};

// SEGD container, little-endian:
//   "SEGD" | u32 version | f64 sampling_rate | f64 epoch_seconds |
//   str channel | u32 epoch_samples | u64 count |
//   count × (str subject | str recording | i64 index | u8 stage |
//            u8 source | f32 samples[epoch_samples])
inline constexpr std::uint32_t kEpochStoreVersion = 1;

std::vector<std::uint8_t> encode_epoch_store(const EpochStore& store);
EpochStore decode_epoch_store(std::span<const std::uint8_t> bytes);
void save_epoch_store(const std::filesystem::path& path, const EpochStore& store);
EpochStore load_epoch_store(const std::filesystem::path& path);

std::array<std::size_t, kNumStages> count_stages(
    std::span<const LabeledEpoch> epochs);

}  // namespace somnus
