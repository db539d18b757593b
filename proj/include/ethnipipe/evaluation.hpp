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

// Fold evaluation, pooled cross-validation reports and inference latency.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ethnipipe/cache.hpp"
#include "ethnipipe/dataset.hpp"
#include "ethnipipe/labels.hpp"
#include "ethnipipe/model.hpp"

namespace ethnipipe {

/// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  void Add(int truth, int predicted);
  std::uint64_t Total() const;
  std::uint64_t Trace() const;
  std::uint64_t RowSum(int truth) const;
  /// Diagonal over row sum; 0 for a class with no samples.
  double Recall(int truth) const;
  /// Trace over total; 0 when empty.
  double Accuracy() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct FoldReport {
  int fold_index = 0;
  std::array<double, kNumClasses> class_accuracy{};
  double total_accuracy = 0.0;
  double mean_loss = 0.0;  // mean test cross-entropy
  ConfusionMatrix confusion;

  friend bool operator==(const FoldReport&, const FoldReport&) = default;
};

/// Builds a report whose accuracies are recomputed from `confusion`.
FoldReport MakeFoldReport(int fold_index, const ConfusionMatrix& confusion, double mean_loss);

/// Report from a row-major B x 4 probability matrix and true labels.
/// Predictions are the arg-max (lowest class on ties).
FoldReport EvaluatePredictions(int fold_index, std::span<const int> labels,
                               std::span<const float> probs);

/// Runs `state` over `test_ids` from the cache. Throws BadConfig on an
/// augmented id and MissingInput on a cache miss.
FoldReport Evaluate(const ModelState<float>& state, const std::vector<std::string>& test_ids,
                    const Manifest& manifest, const PreprocessedCache& cache, int fold_index = 0,
                    int batch_size = 32);

struct CrossValReport {
  std::vector<FoldReport> folds;
  /// Recomputed from pooled confusion counts; fold_index is -1.
  FoldReport aggregate;

  friend bool operator==(const CrossValReport&, const CrossValReport&) = default;
};

/// Sums confusion matrices and pools loss weighted by test-set size.
/// Throws BadConfig on an empty list.
CrossValReport Aggregate(const std::vector<FoldReport>& folds);

enum class ReportFormat { kTable, kStructured };
ReportFormat ParseReportFormat(const std::string& text);

/// Table: header and one row per fold, then the pooled row
/// `African | Asian | Caucasian | Indian | Total Success rate | Total Loss`.
std::string RenderReport(const CrossValReport& report, ReportFormat format);
/// Single pooled row in table layout.
std::string RenderSummaryRow(const FoldReport& row);
/// Inverse of RenderReport(..., kStructured). Throws BadConfig when malformed.
CrossValReport ParseStructuredReport(const std::string& text);

inline constexpr const char* kReportHeader = "#ethnipipe-report v1";

// ------------------------------------------------------------- Latency

struct LatencyStats {
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t forwards = 0;  // including warmup
};

/// Mean and linearly interpolated percentiles of `samples_ms`.
LatencyStats ComputeLatencyStats(std::vector<double> samples_ms);

/// Calls `run_once` warmup + repetitions times, timing only the latter.
LatencyStats BenchmarkLatency(const std::function<void()>& run_once, int repetitions, int warmup);

/// Per-image single-sample forward latency over `images`. Each recorded
/// sample is the mean over the image set.
LatencyStats BenchmarkLatency(const ModelState<float>& state, std::span<const NetInput> images,
                              int repetitions, int warmup);

}  // namespace ethnipipe
