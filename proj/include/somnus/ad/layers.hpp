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
#include <string>
#include <vector>

#include "somnus/ad/ops.hpp"
#include "somnus/ad/params.hpp"
#include "somnus/core/rng.hpp"

namespace somnus::ad {

// Left/right zero padding that keeps the length of a stride-1 convolution.
// Even kernels put the extra cell on the right.
inline std::size_t same_pad_left(std::size_t kernel) { return (kernel - 1) / 2; }
inline std::size_t same_pad_right(std::size_t kernel) {
  return kernel - 1 - same_pad_left(kernel);
}

// Right padding that makes pooling emit ceil(length / window) outputs.
inline std::size_t same_pool_pad(std::size_t length, std::size_t window) {
  const std::size_t out = (length + window - 1) / window;
  return out * window - length;
}

struct Conv1dLayer {
  Tensor weight;  // [C_out, C_in, K]
  Tensor bias;    // [C_out]
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;

  Tensor operator()(const Tensor& x) const {
    return conv1d(x, weight, bias, stride, pad_left, pad_right);
  }
  std::size_t out_length(std::size_t length) const {
    return (length + pad_left + pad_right - weight.dim(2)) / stride + 1;
  }
};

Conv1dLayer make_conv(ParamSet& params, const std::string& name,
                      std::size_t in_channels, std::size_t out_channels,
                      std::size_t kernel, std::size_t stride, bool same,
                      Rng& rng);

struct LinearLayer {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

LinearLayer make_linear(ParamSet& params, const std::string& name,
                        std::size_t in, std::size_t out, Rng& rng);

struct LstmLayer {
  LstmWeights weights;
  std::size_t hidden = 0;
};

LstmLayer make_lstm(ParamSet& params, const std::string& name, std::size_t in,
                    std::size_t hidden, Rng& rng);

LstmState zero_state(std::size_t batch, std::size_t hidden);

// Runs the cell over x[B, T, F] from `state`. When `outputs` is given, the
// hidden state of every step is appended to it.
LstmState run_lstm(const LstmLayer& layer, const Tensor& x, LstmState state,
                   std::vector<Tensor>* outputs = nullptr);

}  // namespace somnus::ad
