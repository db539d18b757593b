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

// Categorical cross-entropy and the softmax derivatives it pairs with.

#include <span>
#include <vector>

namespace ethnipipe {

inline constexpr double kProbabilityFloor = 1e-12;

/// Row-wise numerically stable softmax of a rows x classes matrix.
template <typename T>
std::vector<T> Softmax(std::span<const T> logits, int classes);

/// -mean_i ln(max(probs[i][label_i], 1e-12)). Throws BadConfig for labels
/// outside [0, classes) or a label count that does not match the rows.
template <typename T>
T CrossEntropy(std::span<const T> probs, std::span<const int> labels, int classes);

/// Closed form of d(mean CE)/d(logits): (probs - one_hot) / B.
template <typename T>
std::vector<T> SoftmaxCrossEntropyLogitGrad(std::span<const T> probs,
                                            std::span<const int> labels, int classes);

/// d(mean CE)/d(probs): -1 / (B * p_label) at the label, 0 elsewhere.
template <typename T>
std::vector<T> CrossEntropyProbGrad(std::span<const T> probs, std::span<const int> labels,
                                    int classes);

/// Chain rule through softmax: dz = p * (dp - sum(dp * p)) per row.
template <typename T>
std::vector<T> SoftmaxBackward(std::span<const T> probs, std::span<const T> prob_grad,
                               int classes);

}  // namespace ethnipipe
