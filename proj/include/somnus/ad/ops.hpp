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
#include <cstddef>
#include <span>
#include <vector>

#include "somnus/ad/tensor.hpp"
#include "somnus/core/rng.hpp"

namespace somnus::ad {

// Elementwise arithmetic on equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);

// x[N, in] · w[out, in]ᵀ + b[out] → [N, out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Cross-correlation over the last axis.
//   x[N, C_in, L], w[C_out, C_in, K], b[C_out] → [N, C_out, L_out]
//   L_out = floor((L + pad_left + pad_right − K) / stride) + 1
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride, std::size_t padding);
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride, std::size_t pad_left, std::size_t pad_right);

// Max over windows of the last axis. `pad_right` appends −∞ cells so that
// "same"-style pooling never reads past the signal. Backward routes to the
// first maximal index.
Tensor maxpool1d(const Tensor& x, std::size_t window, std::size_t stride,
                 std::size_t pad_right = 0);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax(const Tensor& x, int axis = -1);

// Inverted dropout. Inference mode, or rate 0, returns `x` itself.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

struct ClassWeights {
  std::array<double, 5> values{1.0, 1.0, 1.0, 1.0, 1.0};

  static ClassWeights uniform() { return {}; }
  // Throws ConfigError unless all five entries are finite and positive.
  void validate() const;
};

// mean over rows of w_y · (−log softmax(logits)_y); logits[N, 5].
Tensor weighted_cross_entropy(const Tensor& logits, std::span<const int> labels,
                              const ClassWeights& weights);

inline constexpr double kBceEpsilon = 1e-7;

// mean of −[t·log p + (1−t)·log(1−p)] with p clamped to [ε, 1−ε].
Tensor bce_loss(const Tensor& probabilities, const Tensor& targets);

struct LstmWeights {
  Tensor w_ih;  // [4H, in]   gate order i, f, g, o
  Tensor w_hh;  // [4H, H]
  Tensor bias;  // [4H]
};

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState lstm_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                    const LstmWeights& weights);

// Sequence plumbing for [B, T, F] layouts.
Tensor select_step(const Tensor& x, std::size_t step);
Tensor stack_steps(std::span<const Tensor> steps);
Tensor transpose12(const Tensor& x);  // [B, C, T] → [B, T, C]
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);

// Linear interpolation of x[B, n] onto `out_len` evenly spaced points with
// both endpoints aligned.
Tensor upsample_linear(const Tensor& x, std::size_t out_len);

}  // namespace somnus::ad
