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

#include "somnus/ad/adam.hpp"

#include <algorithm>
#include <cmath>

#include "somnus/core/errors.hpp"

namespace somnus::ad {

void AdamState::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("adam: learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be > 0");
}

AdamState make_adam_state(std::span<const Tensor> params, double learning_rate,
                          double beta1, double beta2, double epsilon) {
  AdamState state;
  state.learning_rate = learning_rate;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  state.validate();
  for (const Tensor& p : params) {
    state.first_moment.emplace_back(p.numel(), 0.0);
    state.second_moment.emplace_back(p.numel(), 0.0);
  }
  return state;
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ShapeError("adam_step: state tracks " +
                     std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].numel() ||
        state.second_moment[i].size() != params[i].numel()) {
      throw ShapeError("adam_step: moment buffer size mismatch for parameter " +
                       std::to_string(i));
    }
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    auto values = p.mutable_data();
    auto grad = p.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      values[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double clip_grad_norm(std::span<Tensor> params, double max_norm) {
  double sq = 0.0;
  for (const Tensor& p : params) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

void append_adam_arrays(const ParamSet& params, const AdamState& state,
                        ParamSnapshot& out) {
  const auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out.push_back({"adam.m/" + entries[i].name, entries[i].tensor.shape(),
                   state.first_moment.at(i)});
    out.push_back({"adam.v/" + entries[i].name, entries[i].tensor.shape(),
                   state.second_moment.at(i)});
  }
}

void restore_adam_arrays(const ParamSet& params, const ParamSnapshot& arrays,
                         AdamState& state) {
  const auto& entries = params.entries();
  state.first_moment.resize(entries.size());
  state.second_moment.resize(entries.size());
  auto find = [&](const std::string& name) -> const NamedArray& {
    auto it = std::find_if(arrays.begin(), arrays.end(),
                           [&](const NamedArray& a) { return a.name == name; });
    if (it == arrays.end()) throw DataError("checkpoint lacks " + name);
    return *it;
  };
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const NamedArray& m = find("adam.m/" + entries[i].name);
    const NamedArray& v = find("adam.v/" + entries[i].name);
    if (m.values.size() != entries[i].tensor.numel() ||
        v.values.size() != entries[i].tensor.numel()) {
      throw ShapeError("adam moments for " + entries[i].name +
                       " do not match parameter size");
    }
    state.first_moment[i] = m.values;
    state.second_moment[i] = v.values;
  }
}

}  // namespace somnus::ad
