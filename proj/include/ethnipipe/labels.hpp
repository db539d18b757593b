// Copyright 2026 The ethnipipe Authors
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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ethnipipe {

/// The four ethnic-group classes. Codes are persisted in manifests and
/// checkpoints, so the order here must never change.
enum class EthnicLabel : std::uint8_t {
  kAfrican = 0,
  kAsian = 1,
  kCaucasian = 2,
  kIndian = 3,
};

inline constexpr int kNumClasses = 4;

inline constexpr std::array<EthnicLabel, kNumClasses> kAllLabels = {
    EthnicLabel::kAfrican, EthnicLabel::kAsian, EthnicLabel::kCaucasian,
    EthnicLabel::kIndian};

inline constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "African", "Asian", "Caucasian", "Indian"};

constexpr int LabelCode(EthnicLabel label) { return static_cast<int>(label); }

constexpr std::string_view LabelName(EthnicLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

std::optional<EthnicLabel> LabelFromCode(int code);

/// Case-insensitive lookup by class name.
std::optional<EthnicLabel> LabelFromName(std::string_view name);

}  // namespace ethnipipe
