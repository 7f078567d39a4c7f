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
#include <span>
#include <vector>

#include "somnus/ad/params.hpp"
#include "somnus/ad/tensor.hpp"

namespace somnus::ad {

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws ConfigError when a hyperparameter is out of its domain.
  void validate() const;
};

AdamState make_adam_state(std::span<const Tensor> params, double learning_rate,
                          double beta1, double beta2, double epsilon = 1e-8);

// Bias-corrected Adam update of every parameter from its accumulated
// gradient (absent gradients count as zero). Increments step_count.
void adam_step(std::span<Tensor> params, AdamState& state);

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(std::span<Tensor> params, double max_norm);

// Moments round-trip through checkpoints as "adam.m/<name>", "adam.v/<name>".
void append_adam_arrays(const ParamSet& params, const AdamState& state,
                        ParamSnapshot& out);
void restore_adam_arrays(const ParamSet& params, const ParamSnapshot& arrays,
                         AdamState& state);

}  // namespace somnus::ad
