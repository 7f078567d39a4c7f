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

#include "somnus/ad/params.hpp"

#include <algorithm>
#include <bit>

#include "somnus/core/errors.hpp"

namespace somnus::ad {

Tensor ParamSet::add(std::string name, Tensor tensor) {
  for (const Entry& e : entries_) {
    if (e.name == name) throw UsageError("duplicate parameter name " + name);
  }
  tensor.set_requires_grad(true);
  entries_.push_back({std::move(name), tensor});
  return tensor;
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.tensor);
  return out;
}

const Tensor& ParamSet::get(std::string_view name) const {
  for (const Entry& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw UsageError("unknown parameter " + std::string(name));
}

std::size_t ParamSet::numel() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.tensor.numel();
  return n;
}

void ParamSet::zero_grad() {
  for (Entry& e : entries_) e.tensor.zero_grad();
}

std::uint64_t ParamSet::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Entry& e : entries_) {
    for (double v : e.tensor.data()) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

ParamSnapshot ParamSet::snapshot() const {
  ParamSnapshot out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) {
    out.push_back({e.name, e.tensor.shape(),
                   std::vector<double>(e.tensor.data().begin(),
                                       e.tensor.data().end())});
  }
  return out;
}

void ParamSet::load(const ParamSnapshot& snapshot) {
  for (Entry& e : entries_) {
    auto it = std::find_if(snapshot.begin(), snapshot.end(),
                           [&](const NamedArray& a) { return a.name == e.name; });
    if (it == snapshot.end()) {
      throw ShapeError("snapshot lacks parameter " + e.name);
    }
    if (it->shape != e.tensor.shape()) {
      throw ShapeError("parameter " + e.name + " has shape " +
                       shape_str(e.tensor.shape()) + ", snapshot has " +
                       shape_str(it->shape));
    }
    std::copy(it->values.begin(), it->values.end(),
              e.tensor.mutable_data().begin());
  }
}

}  // namespace somnus::ad
