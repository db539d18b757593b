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

#include "ethnipipe/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ethnipipe/error.hpp"

namespace ethnipipe {

namespace {

template <typename T>
std::size_t CheckedRows(std::span<const T> probs, std::span<const int> labels, int classes) {
  if (classes < 1 || probs.size() % static_cast<std::size_t>(classes) != 0) {
    throw BadConfig("probability matrix does not have " + std::to_string(classes) + " columns");
  }
  const std::size_t rows = probs.size() / static_cast<std::size_t>(classes);
  if (rows != labels.size()) {
    throw BadConfig("got " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(rows) + " rows");
  }
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw BadConfig("label " + std::to_string(label) + " out of range [0," +
                      std::to_string(classes) + ")");
    }
  }
  return rows;
}

}  // namespace

template <typename T>
std::vector<T> Softmax(std::span<const T> logits, int classes) {
  std::vector<T> out(logits.size());
  const auto c = static_cast<std::size_t>(classes);
  for (std::size_t r = 0; r < logits.size() / c; ++r) {
    const T* z = logits.data() + r * c;
    T* p = out.data() + r * c;
    const T peak = *std::max_element(z, z + c);
    T sum = 0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(z[j] - peak);
      sum += p[j];
    }
    for (std::size_t j = 0; j < c; ++j) p[j] /= sum;
  }
  return out;
}

template <typename T>
T CrossEntropy(std::span<const T> probs, std::span<const int> labels, int classes) {
  const std::size_t rows = CheckedRows(probs, labels, classes);
  if (rows == 0) return T(0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double p = probs[r * classes + labels[r]];
    total -= std::log(std::max(p, kProbabilityFloor));
  }
  return static_cast<T>(total / static_cast<double>(rows));
}

template <typename T>
std::vector<T> SoftmaxCrossEntropyLogitGrad(std::span<const T> probs,
                                            std::span<const int> labels, int classes) {
  const std::size_t rows = CheckedRows(probs, labels, classes);
  std::vector<T> grad(probs.begin(), probs.end());
  const T inv = T(1) / static_cast<T>(rows);
  for (std::size_t r = 0; r < rows; ++r) grad[r * classes + labels[r]] -= T(1);
  for (T& g : grad) g *= inv;
  return grad;
}

template <typename T>
std::vector<T> CrossEntropyProbGrad(std::span<const T> probs, std::span<const int> labels,
                                    int classes) {
  const std::size_t rows = CheckedRows(probs, labels, classes);
  std::vector<T> grad(probs.size(), T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t i = r * classes + labels[r];
    grad[i] = -T(1) / (static_cast<T>(rows) * probs[i]);
  }
  return grad;
}

template <typename T>
std::vector<T> SoftmaxBackward(std::span<const T> probs, std::span<const T> prob_grad,
                               int classes) {
  std::vector<T> out(probs.size());
  const auto c = static_cast<std::size_t>(classes);
  for (std::size_t r = 0; r < probs.size() / c; ++r) {
    T dot = 0;
    for (std::size_t j = 0; j < c; ++j) dot += prob_grad[r * c + j] * probs[r * c + j];
    for (std::size_t j = 0; j < c; ++j) {
      out[r * c + j] = probs[r * c + j] * (prob_grad[r * c + j] - dot);
    }
  }
  return out;
}

#define ETHNIPIPE_INSTANTIATE_LOSS(T)                                                   \
  template std::vector<T> Softmax<T>(std::span<const T>, int);                          \
  template T CrossEntropy<T>(std::span<const T>, std::span<const int>, int);            \
  template std::vector<T> SoftmaxCrossEntropyLogitGrad<T>(std::span<const T>,           \
                                                          std::span<const int>, int);   \
  template std::vector<T> CrossEntropyProbGrad<T>(std::span<const T>,                   \
                                                  std::span<const int>, int);           \
  template std::vector<T> SoftmaxBackward<T>(std::span<const T>, std::span<const T>, int);

ETHNIPIPE_INSTANTIATE_LOSS(float)
ETHNIPIPE_INSTANTIATE_LOSS(double)

#undef ETHNIPIPE_INSTANTIATE_LOSS

}  // namespace ethnipipe
