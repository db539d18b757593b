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

// Labeled sample bookkeeping: manifests, stratified fold plans and the
// noisy-duplicate class balancing used on training subsets.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ethnipipe/image.hpp"
#include "ethnipipe/labels.hpp"
#include "ethnipipe/preprocess.hpp"

namespace ethnipipe {

struct SampleRecord {
  std::string id;
  std::string path;  // relative to the ingest root, '/'-separated
  EthnicLabel label = EthnicLabel::kAfrican;
  std::string source;
  std::optional<std::string> augmented_from;
  std::optional<std::uint64_t> noise_seed;

  bool augmented() const { return augmented_from.has_value(); }

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

using ClassCounts = std::array<std::size_t, kNumClasses>;

/// Immutable ordered record list with unique ids.
class Manifest {
 public:
  static constexpr int kSchemaVersion = 1;

  Manifest() = default;
  /// Validates id uniqueness and augmentation lineage.
  explicit Manifest(std::vector<SampleRecord> records);

  const std::vector<SampleRecord>& records() const { return records_; }
  int schema_version() const { return kSchemaVersion; }
  std::size_t size() const { return records_.size(); }

  const SampleRecord* Find(const std::string& id) const;
  /// Throws MissingInput naming the id.
  const SampleRecord& At(const std::string& id) const;

  ClassCounts Counts() const;
  /// Counts restricted to the given ids.
  ClassCounts Counts(const std::vector<std::string>& ids) const;

  /// A new manifest with `extra` appended.
  Manifest WithAdded(const std::vector<SampleRecord>& extra) const;

  friend bool operator==(const Manifest& a, const Manifest& b) {
    return a.records_ == b.records_;
  }

 private:
  std::vector<SampleRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

void WriteManifest(std::ostream& out, const Manifest& manifest);
Manifest ReadManifest(std::istream& in);
void SaveManifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest LoadManifest(const std::filesystem::path& path);

/// Subdirectory name -> class.
using LabelMap = std::map<std::string, EthnicLabel>;

/// Canonical class names, capitalized and lower-case.
LabelMap DefaultLabelMap();

/// Parses "dir=Label,dir2=Label2".
LabelMap ParseLabelMap(const std::string& text);

struct IngestResult {
  Manifest manifest;
  std::vector<std::string> skipped;  // relative paths that did not decode
};

/// One record per decodable image under each mapped subdirectory of `root`,
/// sorted by path. Files directly under root count as skipped.
IngestResult IngestDirectory(const std::filesystem::path& root,
                             const LabelMap& labeling);

struct SplitRatios {
  double train = 0.75;
  double val = 0.10;
  double test = 0.15;

  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

SplitRatios ParseSplitRatios(const std::string& text);

enum class Subset { kTrain, kVal, kTest };
std::string_view SubsetName(Subset subset);

struct SplitPlan {
  int fold_index = 0;
  std::vector<std::string> train_ids;  // each list sorted
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;

  const std::vector<std::string>& ids(Subset subset) const;

  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

/// Sample count per (class, subset) for a stratified split. Cells are within
/// one of n_c * ratio, and column sums are the largest-remainder rounding of
/// N * ratio.
std::array<std::array<std::size_t, 3>, kNumClasses> AllocateStrata(
    const ClassCounts& counts, const SplitRatios& ratios);

/// k independent stratified random partitions at the given ratios, one per
/// fold, each drawn with a seed derived from (seed, fold). Rejects manifests
/// containing augmented records and classes with fewer than k samples.
std::vector<SplitPlan> KFoldSplit(const Manifest& manifest, int k,
                                  const SplitRatios& ratios, std::uint64_t seed);

void WriteSplitPlans(std::ostream& out, const std::vector<SplitPlan>& plans);
std::vector<SplitPlan> ReadSplitPlans(std::istream& in);
void SaveSplitPlans(const std::filesystem::path& path,
                    const std::vector<SplitPlan>& plans);
std::vector<SplitPlan> LoadSplitPlans(const std::filesystem::path& path);

struct BalanceResult {
  std::vector<SampleRecord> added;
  /// Original training ids followed by the added ones.
  std::vector<std::string> train_ids;
};

/// Tops every class in the training subset up to the majority count with
/// noisy duplicates of its own samples, cycling through parents in id order.
/// Only the returned records carry noise seeds; nothing in `manifest`
/// changes.
BalanceResult BalanceClasses(const Manifest& manifest,
                             const std::vector<std::string>& train_ids,
                             double sigma, std::uint64_t seed);

/// clamp(round(parent + N(0, sigma^2))) with the noise drawn from noise_seed.
GrayImage AugmentPixels(const GrayImage& parent, double sigma,
                        std::uint64_t noise_seed);

/// AugmentPixels applied to a cached 80x80x3 input (channel 0 is the source).
NetInput AugmentNetInput(const NetInput& parent, double sigma,
                         std::uint64_t noise_seed);

}  // namespace ethnipipe
