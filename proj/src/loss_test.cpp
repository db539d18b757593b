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

#include <doctest.h>

#include <cmath>
#include <random>

#include "ethnipipe/error.hpp"

namespace ethnipipe {

TEST_CASE("cross-entropy examples") {
  const std::vector<double> onehot = {0, 1, 0, 0};
  const std::vector<int> label1 = {1};
  CHECK(CrossEntropy<double>(onehot, label1, 4) == 0.0);
  const std::vector<double> uniform(4, 0.25);
  CHECK(CrossEntropy<double>(uniform, label1, 4) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(CrossEntropy<double>(uniform, label1, 4) == doctest::Approx(1.386294).epsilon(1e-6));

  const std::vector<double> two = {0.7, 0.1, 0.1, 0.1, 0.2, 0.2, 0.5, 0.1};
  const std::vector<int> labels = {0, 2};
  const double l1 = -std::log(0.7), l2 = -std::log(0.5);
  CHECK(CrossEntropy<double>(two, labels, 4) == doctest::Approx((l1 + l2) / 2).epsilon(1e-12));
}

TEST_CASE("cross-entropy floor and errors") {
  const std::vector<double> wrong = {1, 0, 0, 0};
  const std::vector<int> label = {3};
  CHECK(CrossEntropy<double>(wrong, label, 4) == doctest::Approx(-std::log(1e-12)));
  const std::vector<int> bad = {4};
  CHECK_THROWS_AS(CrossEntropy<double>(wrong, bad, 4), Error);
  const std::vector<int> neg = {-1};
  CHECK_THROWS_AS(CrossEntropy<double>(wrong, neg, 4), Error);
  const std::vector<int> two = {0, 1};
  CHECK_THROWS_AS(CrossEntropy<double>(wrong, two, 4), Error);
}

TEST_CASE("property: cross-entropy is non-negative") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 5.0);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(12);
    for (double& v : logits) v = n(rng);
    const auto p = Softmax<double>(logits, 4);
    const std::vector<int> labels = {lab(rng), lab(rng), lab(rng)};
    CHECK(CrossEntropy<double>(p, labels, 4) >= 0.0);
  }
}

TEST_CASE("softmax + cross-entropy gradient identity") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_int_distribution<int> lab(0, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int batch = 1 + trial % 7;
    std::vector<double> logits(batch * 4);
    for (double& v : logits) v = n(rng);
    std::vector<int> labels(batch);
    for (int& l : labels) l = lab(rng);
    const auto p = Softmax<double>(logits, 4);
    const auto closed = SoftmaxCrossEntropyLogitGrad<double>(p, labels, 4);
    const auto dp = CrossEntropyProbGrad<double>(p, labels, 4);
    const auto chain = SoftmaxBackward<double>(p, dp, 4);
    for (std::size_t i = 0; i < closed.size(); ++i) {
      worst = std::max(worst, std::abs(closed[i] - chain[i]));
      const int row = static_cast<int>(i / 4), col = static_cast<int>(i % 4);
      CHECK(closed[i] == doctest::Approx((p[i] - (labels[row] == col)) / batch).epsilon(1e-12));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("softmax is stable for large logits") {
  const std::vector<float> logits = {1000.0f, 1000.0f, -1000.0f, 0.0f};
  const auto p = Softmax<float>(logits, 4);
  CHECK(p[0] == doctest::Approx(0.5f));
  CHECK(p[1] == doctest::Approx(0.5f));
  CHECK(std::isfinite(p[2]));
}

}  // namespace ethnipipe
