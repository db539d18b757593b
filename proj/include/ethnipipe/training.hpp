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

// SGD-with-momentum fine-tuning, hyper-parameter grid search and finite
// difference gradient verification.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ethnipipe/cache.hpp"
#include "ethnipipe/dataset.hpp"
#include "ethnipipe/model.hpp"
#include "ethnipipe/network.hpp"

namespace ethnipipe {

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 32;
  double noise_sigma = 5.0;  // gray levels, for balancing duplicates
  std::uint64_t seed = 0;
  bool balance = true;
  /// Layers whose parameters are never updated.
  std::vector<std::string> frozen_layers;

  /// Throws BadConfig on out-of-range values.
  void Validate() const;
};

struct OptimizerState {
  std::vector<Tensor<float>> velocity;

  static OptimizerState ZerosLike(const ModelState<float>& state);
};

/// v = momentum * v + g;  w = w - lr * v. Spans must have equal length.
template <typename T>
void SgdUpdate(std::span<T> weights, std::span<const T> grads, std::span<T> velocity, T lr,
               T momentum);

/// SgdUpdate over every trainable parameter. Throws BadConfig when gradient
/// or velocity shapes differ from the parameters.
void SgdStep(ModelState<float>& state, const Gradients<float>& grads, OptimizerState& opt,
             float lr, float momentum);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;      // NaN when there is no validation subset
  double val_accuracy = 0.0;  // NaN when there is no validation subset
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// Equality over everything except wall-clock time.
  bool SameMetrics(const TrainLog& other) const;
};

/// One JSON object per line: epoch, train_loss, val_loss, val_acc, seconds.
std::string FormatTrainLogJsonl(const TrainLog& log);
std::string FormatTrainLogTable(const TrainLog& log);

/// Per-channel mean and population std-dev over the given cached inputs.
NormStats ComputeNormStats(const PreprocessedCache& cache, const std::vector<std::string>& ids);

/// Resolves ids to network inputs; augmented ids are regenerated from their
/// parent and noise seed. Throws MissingInput naming the first unknown id.
class SampleSource {
 public:
  SampleSource(const Manifest& manifest, const PreprocessedCache& cache, double noise_sigma);

  NetInput Input(const std::string& id) const;
  int Label(const std::string& id) const;
  /// Fails fast on the first id that cannot be resolved.
  void CheckAvailable(const std::vector<std::string>& ids) const;

  const Manifest& manifest() const { return manifest_; }

 private:
  const Manifest& manifest_;
  const PreprocessedCache& cache_;
  double noise_sigma_;
};

struct TrainResult {
  ModelState<float> final_state;
  ModelState<float> best_state;
  int best_epoch = 0;  // 1-based
  TrainLog log;
  std::vector<SampleRecord> augmented;  // balancing duplicates added for this fold
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on plan.train_ids (balanced with noisy duplicates when
/// cfg.balance), monitoring plan.val_ids. Normalization statistics are fitted
/// on the original training samples. The best state maximizes validation
/// accuracy, then minimizes validation loss, then prefers the earlier epoch.
TrainResult Train(ModelState<float> initial, const SplitPlan& plan, const Manifest& manifest,
                  const PreprocessedCache& cache, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct SubsetMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and accuracy of `state` over `ids`, batched.
SubsetMetrics EvaluateSubset(const ModelState<float>& state, const SampleSource& source,
                             const std::vector<std::string>& ids, int batch_size = 32);

// ------------------------------------------------------------ Grid search

/// Ordered hyper-parameter name -> candidate values. Recognized names: lr,
/// momentum, epochs, batch_size, sigma, width, activation ("relu"), loss
/// ("categorical_crossentropy").
using HyperGrid = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct GridCandidate {
  std::vector<std::pair<std::string, std::string>> values;
  TrainConfig config;
  int head_width = 500;

  std::string Serialize() const;
};

/// Cartesian product in row-major order (last key varies fastest).
std::vector<GridCandidate> ExpandGrid(const HyperGrid& grid, const TrainConfig& base,
                                      int base_head_width);

struct GridResult {
  GridCandidate candidate;
  double mean_val_accuracy = 0.0;
  double mean_val_loss = 0.0;
  std::vector<double> fold_val_accuracy;
  std::size_t order = 0;  // position in the expansion
};

/// Builds the initial state for a candidate's model spec.
using ModelFactory = std::function<ModelState<float>(const ModelSpec&)>;

/// Trains every candidate on every fold and ranks by mean best-epoch
/// validation accuracy (descending); ties keep expansion order.
std::vector<GridResult> GridSearch(const HyperGrid& grid, const TrainConfig& base,
                                   const BackboneBlocks& blocks, int base_head_width,
                                   const ModelFactory& factory,
                                   const std::vector<SplitPlan>& folds,
                                   const Manifest& manifest, const PreprocessedCache& cache);

// ---------------------------------------------------------- Gradient check

struct ParamCoordinate {
  std::size_t param = 0;
  std::size_t index = 0;

  friend bool operator==(const ParamCoordinate&, const ParamCoordinate&) = default;
};

/// Distinct coordinates, cycling through parameter tensors so every tensor is
/// represented before any repeats.
std::vector<ParamCoordinate> SampleCoordinates(const ModelState<double>& state,
                                               std::size_t count, std::uint64_t seed,
                                               bool head_only);

struct GradientCheckResult {
  /// Over coordinates that stayed on one side of every kink.
  double max_relative_error = 0.0;
  std::vector<double> analytic;
  std::vector<double> numeric;
  /// True where w +/- eps flipped a ReLU input sign or a max-pool winner, so
  /// the loss is not differentiable across the probe and the central
  /// difference is not comparable.
  std::vector<bool> crossed_kink;
  std::size_t checked = 0;  // coordinates counted in max_relative_error
};

/// |a - n| / max(|a|, |n|, 1e-8) for one coordinate.
double RelativeError(double analytic, double numeric);

/// Compares backprop gradients with central differences
/// (L(w + eps) - L(w - eps)) / 2 eps on the given coordinates. Throws
/// RuntimeFailure if any loss evaluation is not finite.
/// Coordinates whose probes cross a kink are recorded but not scored.
GradientCheckResult GradientCheck(const ModelState<double>& state, std::span<const double> batch,
                                  std::span<const int> labels, double epsilon,
                                  const std::vector<ParamCoordinate>& coords);

}  // namespace ethnipipe
