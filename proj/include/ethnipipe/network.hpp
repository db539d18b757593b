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

// Batched forward and backward passes over a ModelState.
//
// Inputs are B x 80 x 80 x 3 unit-scaled values (height-width-channel per
// image); each channel is standardized with the state's NormStats before the
// first convolution. Activations stay in HWC order, so flatten is free.

#include <span>
#include <vector>

#include "ethnipipe/model.hpp"

namespace ethnipipe {

enum class Mode { kTrain, kEval };

/// Layer outputs from one forward pass; `outputs[i]` belongs to
/// spec.layers[i] and holds batch * layers[i].output.size() values.
template <typename T>
struct ForwardTrace {
  int batch = 0;
  std::vector<T> input;  // standardized input
  std::vector<std::vector<T>> outputs;
};

/// B x num_classes softmax probabilities. No layer couples examples, so
/// kTrain and kEval compute the same function. Throws BadConfig on a batch
/// whose size is not a multiple of the input size.
template <typename T>
std::vector<T> Forward(const ModelState<T>& state, std::span<const T> batch, Mode mode,
                       ForwardTrace<T>* trace = nullptr);

/// Gradient tensors aligned with state.params.
template <typename T>
using Gradients = std::vector<Tensor<T>>;

template <typename T>
Gradients<T> ZeroGradients(const ModelState<T>& state);

template <typename T>
struct LossGradients {
  T loss = 0;
  std::vector<T> probs;
  Gradients<T> grads;
};

/// Mean cross-entropy and its gradient with respect to every parameter.
/// Labels must be class codes in [0, num_classes).
template <typename T>
LossGradients<T> ForwardBackward(const ModelState<T>& state, std::span<const T> batch,
                                 std::span<const int> labels);

/// Backward pass from a given gradient at the logits (softmax input).
template <typename T>
Gradients<T> BackwardFromLogits(const ModelState<T>& state, const ForwardTrace<T>& trace,
                                std::span<const T> logit_grad);

}  // namespace ethnipipe
