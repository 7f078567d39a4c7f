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

#include "somnus/data/epoch.hpp"

#include <algorithm>
#include <cmath>

#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"

namespace somnus {

std::size_t EpochStore::epoch_samples() const {
  return static_cast<std::size_t>(std::llround(sampling_rate * epoch_seconds));
}

std::vector<std::uint8_t> encode_epoch_store(const EpochStore& store) {
  const std::size_t n = store.epoch_samples();
  ByteWriter w;
  w.raw("SEGD");
  w.u32(kEpochStoreVersion);
  w.f64(store.sampling_rate);
  w.f64(store.epoch_seconds);
  w.str(store.channel);
  w.u32(static_cast<std::uint32_t>(n));
  w.u64(store.epochs.size());
  for (const LabeledEpoch& e : store.epochs) {
    if (e.samples.size() != n) {
      throw ShapeError("epoch store: epoch with " +
                       std::to_string(e.samples.size()) + " samples, expected " +
                       std::to_string(n));
    }
    w.str(e.subject_id);
    w.str(e.recording_id);
    w.i64(e.index);
    w.u8(static_cast<std::uint8_t>(e.stage));
    w.u8(static_cast<std::uint8_t>(e.source));
    for (float v : e.samples) w.f32(v);
  }
  return w.take();
}

EpochStore decode_epoch_store(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("SEGD", "epoch store");
  const std::uint32_t version = r.u32();
  if (version != kEpochStoreVersion) {
    throw DataError("unsupported epoch store version " + std::to_string(version));
  }
  EpochStore store;
  store.sampling_rate = r.f64();
  store.epoch_seconds = r.f64();
  store.channel = r.str();
  const std::uint32_t n = r.u32();
  if (n != store.epoch_samples()) {
    throw DataError("epoch store: header epoch length " + std::to_string(n) +
                    " disagrees with sampling_rate × epoch_seconds");
  }
  const std::uint64_t count = r.u64();
  store.epochs.reserve(static_cast<std::size_t>(
      std::min<std::uint64_t>(count, r.remaining() / (4ULL * n + 1))));
  for (std::uint64_t i = 0; i < count; ++i) {
    LabeledEpoch e;
    e.subject_id = r.str();
    e.recording_id = r.str();
    e.index = r.i64();
    const std::uint8_t stage = r.u8();
    e.stage = stage_from_index(stage);
    const std::uint8_t source = r.u8();
    if (source > 1) throw DataError("epoch store: bad source tag");
    e.source = static_cast<EpochSource>(source);
    e.samples.resize(n);
    for (float& v : e.samples) v = r.f32();
    store.epochs.push_back(std::move(e));
  }
  if (r.remaining() != 0) throw DataError("epoch store: trailing bytes");
  return store;
}

void save_epoch_store(const std::filesystem::path& path, const EpochStore& store) {
  write_file(path, encode_epoch_store(store));
}

EpochStore load_epoch_store(const std::filesystem::path& path) {
  return decode_epoch_store(read_file(path));
}

std::array<std::size_t, kNumStages> count_stages(
    std::span<const LabeledEpoch> epochs) {
  std::array<std::size_t, kNumStages> counts{};
  for (const LabeledEpoch& e : epochs) ++counts[static_cast<std::size_t>(e.stage)];
  return counts;
}

}  // namespace somnus
