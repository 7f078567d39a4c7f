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
#include <string>
#include <string_view>
#include <vector>

#include "somnus/ad/tensor.hpp"

namespace somnus::ad {

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;

  bool operator==(const NamedArray&) const = default;
};

using ParamSnapshot = std::vector<NamedArray>;

// Ordered, named collection of trainable leaves owned by a network.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  Tensor add(std::string name, Tensor tensor);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  const Tensor& get(std::string_view name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t numel() const;

  void zero_grad();

  // FNV-1a over the raw bits of every value, in entry order.
  std::uint64_t fingerprint() const;

  ParamSnapshot snapshot() const;
  // Copies values in by name; throws ShapeError on missing names or shapes.
  void load(const ParamSnapshot& snapshot);

 private:
  std::vector<Entry> entries_;
};

}  // namespace somnus::ad
