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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "somnus/ad/params.hpp"

namespace somnus::ad {

// SEGK container, little-endian:
//   "SEGK" | u32 version | i64 epoch | f64 val_acc | f64 val_mf1 |
//   u64 seed | u64 step | str kind | u32 count |
//   count × (str name | u32 rank | u64 dims[rank] | f64 values[∏dims])
// where str = u32 length + bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::int64_t epoch = -1;
  double val_acc = 0.0;
  double val_mf1 = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;  // optimizer steps taken, for resume
  std::string kind;        // e.g. "classifier", "gan"

  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  CheckpointMeta meta;
  ParamSnapshot arrays;

  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Entries of `arrays` whose name starts with `prefix`, prefix stripped.
ParamSnapshot select_prefixed(const ParamSnapshot& arrays,
                              std::string_view prefix);
void append_prefixed(ParamSnapshot& out, const ParamSnapshot& arrays,
                     std::string_view prefix);

}  // namespace somnus::ad
