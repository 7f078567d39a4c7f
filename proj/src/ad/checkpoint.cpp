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

#include "somnus/ad/checkpoint.hpp"

#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"

namespace somnus::ad {

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  ByteWriter w;
  w.raw("SEGK");
  w.u32(kCheckpointVersion);
  w.i64(checkpoint.meta.epoch);
  w.f64(checkpoint.meta.val_acc);
  w.f64(checkpoint.meta.val_mf1);
  w.u64(checkpoint.meta.seed);
  w.u64(checkpoint.meta.step);
  w.str(checkpoint.meta.kind);
  w.u32(static_cast<std::uint32_t>(checkpoint.arrays.size()));
  for (const NamedArray& a : checkpoint.arrays) {
    if (shape_numel(a.shape) != a.values.size()) {
      throw ShapeError("checkpoint array " + a.name + " shape/value mismatch");
    }
    w.str(a.name);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (std::size_t d : a.shape) w.u64(d);
    for (double v : a.values) w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("SEGK", "checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.meta.epoch = r.i64();
  c.meta.val_acc = r.f64();
  c.meta.val_mf1 = r.f64();
  c.meta.seed = r.u64();
  c.meta.step = r.u64();
  c.meta.kind = r.str();
  const std::uint32_t count = r.u32();
  c.arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw DataError("checkpoint array " + a.name + " has rank > 8");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      a.shape.push_back(static_cast<std::size_t>(r.u64()));
      n *= a.shape.back();
    }
    if (n * 8 > r.remaining()) {
      throw DataError("checkpoint array " + a.name + " truncated at offset " +
                      std::to_string(r.offset()));
    }
    a.values.resize(n);
    for (double& v : a.values) v = r.f64();
    c.arrays.push_back(std::move(a));
  }
  if (r.remaining() != 0) {
    throw DataError("trailing bytes after checkpoint payload at offset " +
                    std::to_string(r.offset()));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& checkpoint) {
  write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

ParamSnapshot select_prefixed(const ParamSnapshot& arrays,
                              std::string_view prefix) {
  ParamSnapshot out;
  for (const NamedArray& a : arrays) {
    if (a.name.starts_with(prefix)) {
      out.push_back({a.name.substr(prefix.size()), a.shape, a.values});
    }
  }
  return out;
}

void append_prefixed(ParamSnapshot& out, const ParamSnapshot& arrays,
                     std::string_view prefix) {
  for (const NamedArray& a : arrays) {
    out.push_back({std::string(prefix) + a.name, a.shape, a.values});
  }
}

}  // namespace somnus::ad
