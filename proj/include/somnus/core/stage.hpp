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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace somnus {

// AASM sleep stages in label order: ŷ ∈ {0..4} ↔ W, N1, N2, N3, REM.
enum class Stage : std::uint8_t { kW = 0, kN1 = 1, kN2 = 2, kN3 = 3, kREM = 4 };

inline constexpr std::size_t kNumStages = 5;

inline constexpr std::array<std::string_view, kNumStages> kStageNames = {
    "W", "N1", "N2", "N3", "REM"};

inline constexpr int stage_index(Stage s) { return static_cast<int>(s); }

std::string_view stage_name(Stage s);

// Accepts the short names above (case-insensitive); nullopt otherwise.
std::optional<Stage> stage_from_name(std::string_view name);

Stage stage_from_index(int index);

}  // namespace somnus
