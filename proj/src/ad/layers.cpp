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

#include "somnus/ad/layers.hpp"

#include "somnus/ad/init.hpp"
#include "somnus/core/errors.hpp"

namespace somnus::ad {

Conv1dLayer make_conv(ParamSet& params, const std::string& name,
                      std::size_t in_channels, std::size_t out_channels,
                      std::size_t kernel, std::size_t stride, bool same,
                      Rng& rng) {
  if (kernel == 0 || stride == 0 || in_channels == 0 || out_channels == 0) {
    throw ConfigError("conv layer '" + name + "' has a zero dimension");
  }
  Conv1dLayer layer;
  const std::size_t fan_in = in_channels * kernel;
  layer.weight = params.add(name + ".weight",
                            he_uniform({out_channels, in_channels, kernel}, fan_in, rng));
  layer.bias = params.add(name + ".bias", uniform_fan_in({out_channels}, fan_in, rng));
  layer.stride = stride;
  if (same) {
    layer.pad_left = same_pad_left(kernel);
    layer.pad_right = same_pad_right(kernel);
  }
  return layer;
}

LinearLayer make_linear(ParamSet& params, const std::string& name,
                        std::size_t in, std::size_t out, Rng& rng) {
  LinearLayer layer;
  layer.weight = params.add(name + ".weight", uniform_fan_in({out, in}, in, rng));
  layer.bias = params.add(name + ".bias", uniform_fan_in({out}, in, rng));
  return layer;
}

LstmLayer make_lstm(ParamSet& params, const std::string& name, std::size_t in,
                    std::size_t hidden, Rng& rng) {
  LstmLayer layer;
  layer.hidden = hidden;
  layer.weights.w_ih = params.add(name + ".w_ih", uniform_fan_in({4 * hidden, in}, hidden, rng));
  layer.weights.w_hh =
      params.add(name + ".w_hh", uniform_fan_in({4 * hidden, hidden}, hidden, rng));
  layer.weights.bias = params.add(name + ".bias", uniform_fan_in({4 * hidden}, hidden, rng));
  return layer;
}

LstmState zero_state(std::size_t batch, std::size_t hidden) {
  return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
}

LstmState run_lstm(const LstmLayer& layer, const Tensor& x, LstmState state,
                   std::vector<Tensor>* outputs) {
  if (x.rank() != 3) throw ShapeError("run_lstm expects [B, T, F] input");
  const std::size_t steps = x.dim(1);
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_step(select_step(x, t), state.h, state.c, layer.weights);
    if (outputs) outputs->push_back(state.h);
  }
  return state;
}

}  // namespace somnus::ad
