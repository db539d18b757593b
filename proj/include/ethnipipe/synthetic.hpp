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

// Deterministic synthetic "face-like" images for end-to-end runs without a
// real dataset. Each class differs in face tone and in the texture drawn
// over the eye and mouth regions.

#include <cstdint>
#include <filesystem>
#include <random>

#include "ethnipipe/image.hpp"
#include "ethnipipe/labels.hpp"

namespace ethnipipe {

struct SyntheticOptions {
  int per_class = 100;
  std::uint64_t seed = 7;
  int min_side = 96;
  int max_side = 160;
};

RgbImage GenerateSyntheticFace(EthnicLabel label, std::mt19937_64& rng, int height, int width);

/// Writes <root>/<ClassName>/synth_NNNN.png for every class and returns the
/// number of images written.
std::size_t WriteSyntheticDataset(const std::filesystem::path& root,
                                  const SyntheticOptions& options = {});

}  // namespace ethnipipe
