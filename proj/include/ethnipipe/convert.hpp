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

// Import of public pretrained VGG-style weights stored as Keras HDF5 files.

#include <filesystem>

#include "ethnipipe/weights.hpp"

namespace ethnipipe {

/// Maps every `blockK_convJ` kernel and bias dataset in a Keras-layout HDF5
/// file to `convK_J.kernel` (HWIO) and `convK_J.bias`. Kernels stored OIHW
/// (as exported from PyTorch) are transposed. Throws MissingInput for an
/// unreadable file and BadConfig when no convolution weights are found or a
/// kernel and bias disagree.
WeightArchive ConvertKerasH5(const std::filesystem::path& path);

}  // namespace ethnipipe
