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

#include "ethnipipe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "ethnipipe/error.hpp"

namespace ethnipipe {

namespace {

constexpr const char* kManifestHeader = "#ethnipipe-manifest v1";
constexpr const char* kSplitHeader = "#ethnipipe-split v1";

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

void CheckField(const std::string& value, const char* what) {
  if (value.empty() || value.find_first_of("\t\r\n") != std::string::npos) {
    throw BadConfig(std::string(what) + " must be non-empty and free of tabs/newlines: '" +
                    value + "'");
  }
}

std::mt19937_64 SeededEngine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::string LabelList(const ClassCounts& counts, std::size_t below) {
  std::string out;
  for (EthnicLabel label : kAllLabels) {
    const std::size_t n = counts[LabelCode(label)];
    if (n > 0 && n < below) {
      if (!out.empty()) out += ", ";
      out += std::string(LabelName(label)) + " (" + std::to_string(n) + ")";
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Manifest

Manifest::Manifest(std::vector<SampleRecord> records) : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second) {
      throw BadConfig("duplicate sample id '" + records_[i].id + "'");
    }
  }
  for (const SampleRecord& r : records_) {
    if (r.augmented_from.has_value() != r.noise_seed.has_value()) {
      throw BadConfig("record '" + r.id +
                      "' must carry both augmented_from and noise_seed or neither");
    }
    if (!r.augmented_from) continue;
    const SampleRecord* parent = Find(*r.augmented_from);
    if (parent == nullptr) {
      throw BadConfig("record '" + r.id + "' augments unknown id '" +
                      *r.augmented_from + "'");
    }
    if (parent->augmented()) {
      throw BadConfig("record '" + r.id + "' augments an augmented record");
    }
  }
}

const SampleRecord* Manifest::Find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const SampleRecord& Manifest::At(const std::string& id) const {
  const SampleRecord* r = Find(id);
  if (r == nullptr) throw MissingInput("id '" + id + "' not in manifest");
  return *r;
}

ClassCounts Manifest::Counts() const {
  ClassCounts counts{};
  for (const SampleRecord& r : records_) ++counts[LabelCode(r.label)];
  return counts;
}

ClassCounts Manifest::Counts(const std::vector<std::string>& ids) const {
  ClassCounts counts{};
  for (const std::string& id : ids) ++counts[LabelCode(At(id).label)];
  return counts;
}

Manifest Manifest::WithAdded(const std::vector<SampleRecord>& extra) const {
  std::vector<SampleRecord> all = records_;
  all.insert(all.end(), extra.begin(), extra.end());
  return Manifest(std::move(all));
}

void WriteManifest(std::ostream& out, const Manifest& manifest) {
  out << kManifestHeader << '\n';
  for (const SampleRecord& r : manifest.records()) {
    CheckField(r.id, "id");
    CheckField(r.path, "path");
    CheckField(r.source, "source");
    out << r.id << '\t' << r.path << '\t' << LabelCode(r.label) << '\t' << r.source
        << '\t' << r.augmented_from.value_or("-") << '\t';
    if (r.noise_seed) {
      out << *r.noise_seed;
    } else {
      out << '-';
    }
    out << '\n';
  }
}

Manifest ReadManifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw BadConfig("not an ethnipipe manifest (expected header '" +
                    std::string(kManifestHeader) + "')");
  }
  std::vector<SampleRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = SplitTabs(line);
    if (f.size() != 6) {
      throw BadConfig("manifest line " + std::to_string(line_no) + ": expected 6 fields, got " +
                      std::to_string(f.size()));
    }
    SampleRecord r;
    r.id = f[0];
    r.path = f[1];
    int code = -1;
    try {
      code = std::stoi(f[2]);
    } catch (const std::exception&) {
    }
    const auto label = LabelFromCode(code);
    if (!label) {
      throw BadConfig("manifest line " + std::to_string(line_no) + ": bad label code '" +
                      f[2] + "'");
    }
    r.label = *label;
    r.source = f[3];
    if (f[4] != "-") r.augmented_from = f[4];
    if (f[5] != "-") r.noise_seed = std::stoull(f[5]);
    records.push_back(std::move(r));
  }
  return Manifest(std::move(records));
}

void SaveManifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write manifest " + path.string());
  WriteManifest(out, manifest);
}

Manifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("manifest not found: " + path.string());
  return ReadManifest(in);
}

// ------------------------------------------------------------------ Ingest

LabelMap DefaultLabelMap() {
  LabelMap map;
  for (EthnicLabel label : kAllLabels) {
    std::string name(LabelName(label));
    map[name] = label;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    map[name] = label;
  }
  return map;
}

LabelMap ParseLabelMap(const std::string& text) {
  LabelMap map;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw BadConfig("label map entry '" + item + "' lacks '='");
    const auto label = LabelFromName(item.substr(eq + 1));
    if (!label) throw BadConfig("label map entry '" + item + "' names an unknown class");
    map[item.substr(0, eq)] = *label;
  }
  if (map.empty()) throw BadConfig("label map is empty");
  return map;
}

IngestResult IngestDirectory(const std::filesystem::path& root,
                             const LabelMap& labeling) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw MissingInput("ingest root not found: " + root.string());

  std::vector<fs::directory_entry> top(fs::directory_iterator(root), {});
  std::sort(top.begin(), top.end());

  std::vector<SampleRecord> records;
  std::vector<std::string> skipped;
  fs::path abs_root = fs::absolute(root).lexically_normal();
  if (abs_root.filename().empty()) abs_root = abs_root.parent_path();
  const std::string root_name = abs_root.filename().string();
  for (const auto& entry : top) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory()) {
      skipped.push_back(name);
      continue;
    }
    auto it = labeling.find(name);
    if (it == labeling.end()) {
      throw BadConfig("subdirectory '" + name + "' is not mapped to a class");
    }
    for (const auto& file : fs::recursive_directory_iterator(entry.path())) {
      if (!file.is_regular_file()) continue;
      const std::string rel = fs::relative(file.path(), root).generic_string();
      if (!TryDecodeImageFile(file.path())) {
        skipped.push_back(rel);
        continue;
      }
      SampleRecord r;
      r.id = rel;
      r.path = rel;
      r.label = it->second;
      // Nested layouts (Class/Database/img.png) keep the database as source.
      const fs::path rel_path(rel);
      auto part = rel_path.begin();
      ++part;
      const bool nested = std::distance(rel_path.begin(), rel_path.end()) > 2;
      r.source = nested ? part->string() : (root_name.empty() ? "ingest" : root_name);
      records.push_back(std::move(r));
    }
  }
  if (records.empty()) throw MissingInput("no images found under " + root.string());
  std::sort(records.begin(), records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.path < b.path; });
  std::sort(skipped.begin(), skipped.end());
  return IngestResult{Manifest(std::move(records)), std::move(skipped)};
}

// ------------------------------------------------------------------- Split

SplitRatios ParseSplitRatios(const std::string& text) {
  std::stringstream ss(text);
  std::string part;
  std::vector<double> values;
  while (std::getline(ss, part, ',')) {
    try {
      values.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw BadConfig("bad ratio '" + part + "'");
    }
  }
  if (values.size() != 3) throw BadConfig("ratios need three values train,val,test");
  return SplitRatios{values[0], values[1], values[2]};
}

std::string_view SubsetName(Subset subset) {
  switch (subset) {
    case Subset::kTrain:
      return "train";
    case Subset::kVal:
      return "val";
    case Subset::kTest:
      return "test";
  }
  return "?";
}

const std::vector<std::string>& SplitPlan::ids(Subset subset) const {
  switch (subset) {
    case Subset::kTrain:
      return train_ids;
    case Subset::kVal:
      return val_ids;
    case Subset::kTest:
      break;
  }
  return test_ids;
}

namespace {

void ValidateRatios(const SplitRatios& r) {
  if (r.train < 0 || r.val < 0 || r.test < 0) throw BadConfig("split ratios must be >= 0");
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw BadConfig("split ratios must sum to 1");
  }
}

// Snaps values within 1e-9 of an integer so 1000 * 0.1 counts as exact.
double Snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

std::array<std::array<std::size_t, 3>, kNumClasses> AllocateStrata(
    const ClassCounts& counts, const SplitRatios& ratios) {
  ValidateRatios(ratios);
  const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});

  // Subset totals by largest remainder; ties go to the earlier subset.
  std::array<std::size_t, 3> targets{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double q = Snap(static_cast<double>(total) * r[s]);
    targets[s] = static_cast<std::size_t>(std::floor(q));
    frac[s] = q - std::floor(q);
    assigned += targets[s];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++targets[order[i % 3]];

  // Per-cell floors plus a 0/1 bump matrix matching the row and column
  // residuals. With 4 classes x 3 subsets, all 2^12 bump patterns are
  // enumerated; the pick maximizes the rounded-up fractional mass, prefers
  // patterns meeting the proportion bound, and breaks ties by mask order.
  std::array<std::array<std::size_t, 3>, kNumClasses> floors{};
  std::array<std::array<double, 3>, kNumClasses> cell_frac{};
  for (int c = 0; c < kNumClasses; ++c) {
    for (int s = 0; s < 3; ++s) {
      const double q = Snap(static_cast<double>(counts[c]) * r[s]);
      floors[c][s] = static_cast<std::size_t>(std::floor(q));
      cell_frac[c][s] = q - std::floor(q);
    }
  }

  auto stratified = [&](const std::array<std::array<std::size_t, 3>, kNumClasses>& cells) {
    for (int s = 0; s < 3; ++s) {
      if (targets[s] == 0) continue;
      const double size = static_cast<double>(targets[s]);
      for (int c = 0; c < kNumClasses; ++c) {
        const double dev = std::abs(cells[c][s] / size -
                                    static_cast<double>(counts[c]) / static_cast<double>(total));
        if (dev > 1.0 / size + 1e-12) return false;
      }
    }
    return true;
  };

  constexpr int kCells = kNumClasses * 3;
  double best_score = -1.0;
  bool best_stratified = false;
  std::array<std::array<std::size_t, 3>, kNumClasses> best{};
  bool found = false;
  for (unsigned mask = 0; mask < (1u << kCells); ++mask) {
    auto cells = floors;
    double score = 0.0;
    bool ok = true;
    for (int bit = 0; bit < kCells && ok; ++bit) {
      if (!(mask & (1u << bit))) continue;
      const int c = bit / 3;
      const int s = bit % 3;
      if (counts[c] == 0 || r[s] == 0.0) ok = false;
      ++cells[c][s];
      score += cell_frac[c][s] > 0.0 ? cell_frac[c][s] : -1.0;
    }
    if (!ok) continue;
    for (int c = 0; c < kNumClasses && ok; ++c) {
      ok = cells[c][0] + cells[c][1] + cells[c][2] == counts[c];
    }
    for (int s = 0; s < 3 && ok; ++s) {
      std::size_t col = 0;
      for (int c = 0; c < kNumClasses; ++c) col += cells[c][s];
      ok = col == targets[s];
    }
    if (!ok) continue;
    const bool strat = stratified(cells);
    if (!found || (strat && !best_stratified) ||
        (strat == best_stratified && score > best_score + 1e-12)) {
      best = cells;
      best_score = score;
      best_stratified = strat;
      found = true;
    }
  }
  if (!found) throw RuntimeFailure("no stratified allocation satisfies the split ratios");
  return best;
}

std::vector<SplitPlan> KFoldSplit(const Manifest& manifest, int k,
                                  const SplitRatios& ratios, std::uint64_t seed) {
  if (k < 2) throw BadConfig("k must be >= 2, got " + std::to_string(k));
  ValidateRatios(ratios);
  std::array<std::vector<std::string>, kNumClasses> by_class;
  for (const SampleRecord& r : manifest.records()) {
    if (r.augmented()) {
      throw BadConfig("cannot split a manifest containing augmented record '" + r.id + "'");
    }
    by_class[LabelCode(r.label)].push_back(r.id);
  }
  const ClassCounts counts = manifest.Counts();
  const std::string small = LabelList(counts, static_cast<std::size_t>(k));
  if (!small.empty()) throw BadConfig("classes with fewer than k samples: " + small);
  for (auto& ids : by_class) std::sort(ids.begin(), ids.end());

  const auto cells = AllocateStrata(counts, ratios);
  std::vector<SplitPlan> plans;
  plans.reserve(static_cast<std::size_t>(k));
  for (int fold = 0; fold < k; ++fold) {
    SplitPlan plan;
    plan.fold_index = fold;
    plan.seed = SeededEngine(seed, static_cast<std::uint64_t>(fold))();
    std::mt19937_64 rng(plan.seed);
    for (int c = 0; c < kNumClasses; ++c) {
      std::vector<std::string> ids = by_class[c];
      std::shuffle(ids.begin(), ids.end(), rng);
      auto it = ids.begin();
      auto take = [&](std::vector<std::string>& dst, std::size_t n) {
        dst.insert(dst.end(), it, it + static_cast<std::ptrdiff_t>(n));
        it += static_cast<std::ptrdiff_t>(n);
      };
      take(plan.train_ids, cells[c][0]);
      take(plan.val_ids, cells[c][1]);
      take(plan.test_ids, cells[c][2]);
    }
    std::sort(plan.train_ids.begin(), plan.train_ids.end());
    std::sort(plan.val_ids.begin(), plan.val_ids.end());
    std::sort(plan.test_ids.begin(), plan.test_ids.end());
    plans.push_back(std::move(plan));
  }
  return plans;
}

void WriteSplitPlans(std::ostream& out, const std::vector<SplitPlan>& plans) {
  out << kSplitHeader << '\n';
  for (const SplitPlan& p : plans) out << "#seed\t" << p.fold_index << '\t' << p.seed << '\n';
  for (const SplitPlan& p : plans) {
    for (Subset s : {Subset::kTrain, Subset::kVal, Subset::kTest}) {
      for (const std::string& id : p.ids(s)) {
        out << p.fold_index << '\t' << SubsetName(s) << '\t' << id << '\n';
      }
    }
  }
}

std::vector<SplitPlan> ReadSplitPlans(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSplitHeader) {
    throw BadConfig("not an ethnipipe split file (expected header '" +
                    std::string(kSplitHeader) + "')");
  }
  std::map<int, SplitPlan> by_fold;
  auto fold_of = [&](const std::string& text) {
    const int fold = std::stoi(text);
    if (fold < 0) throw BadConfig("negative fold index in split file");
    SplitPlan& plan = by_fold[fold];
    plan.fold_index = fold;
    return &plan;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = SplitTabs(line);
    if (f.size() != 3) throw BadConfig("split file: malformed line '" + line + "'");
    if (f[0] == "#seed") {
      fold_of(f[1])->seed = std::stoull(f[2]);
      continue;
    }
    if (!f[0].empty() && f[0][0] == '#') continue;
    SplitPlan* plan = fold_of(f[0]);
    if (f[1] == "train") {
      plan->train_ids.push_back(f[2]);
    } else if (f[1] == "val") {
      plan->val_ids.push_back(f[2]);
    } else if (f[1] == "test") {
      plan->test_ids.push_back(f[2]);
    } else {
      throw BadConfig("split file: unknown subset '" + f[1] + "'");
    }
  }
  std::vector<SplitPlan> plans;
  for (auto& [fold, plan] : by_fold) {
    if (fold != static_cast<int>(plans.size())) {
      throw BadConfig("split file: folds are not numbered 0..k-1");
    }
    std::sort(plan.train_ids.begin(), plan.train_ids.end());
    std::sort(plan.val_ids.begin(), plan.val_ids.end());
    std::sort(plan.test_ids.begin(), plan.test_ids.end());
    plans.push_back(std::move(plan));
  }
  return plans;
}

void SaveSplitPlans(const std::filesystem::path& path, const std::vector<SplitPlan>& plans) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write split file " + path.string());
  WriteSplitPlans(out, plans);
}

std::vector<SplitPlan> LoadSplitPlans(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("split file not found: " + path.string());
  return ReadSplitPlans(in);
}

// --------------------------------------------------------------- Balancing

BalanceResult BalanceClasses(const Manifest& manifest,
                             const std::vector<std::string>& train_ids, double sigma,
                             std::uint64_t seed) {
  if (!(sigma > 0.0)) throw BadConfig("noise sigma must be > 0");

  std::array<std::vector<std::string>, kNumClasses> parents;
  ClassCounts counts{};
  std::set<std::string> seen;
  for (const std::string& id : train_ids) {
    if (!seen.insert(id).second) throw BadConfig("duplicate training id '" + id + "'");
    const SampleRecord& r = manifest.At(id);
    ++counts[LabelCode(r.label)];
    if (!r.augmented()) parents[LabelCode(r.label)].push_back(id);
  }
  for (EthnicLabel label : kAllLabels) {
    if (parents[LabelCode(label)].empty()) {
      throw BadConfig("training subset has no original samples of class " +
                      std::string(LabelName(label)));
    }
  }
  for (auto& p : parents) std::sort(p.begin(), p.end());

  const std::size_t target = *std::max_element(counts.begin(), counts.end());
  std::mt19937_64 rng = SeededEngine(seed, 0xba1a9ceULL);

  BalanceResult result;
  result.train_ids = train_ids;
  for (EthnicLabel label : kAllLabels) {
    const auto& pool = parents[LabelCode(label)];
    for (std::size_t n = counts[LabelCode(label)], i = 0; n < target; ++n, ++i) {
      const SampleRecord& parent = manifest.At(pool[i % pool.size()]);
      SampleRecord r;
      for (std::size_t suffix = i / pool.size();; ++suffix) {
        r.id = parent.id + "~aug" + std::to_string(suffix);
        if (manifest.Find(r.id) == nullptr && seen.count(r.id) == 0) break;
      }
      seen.insert(r.id);
      r.path = parent.path;
      r.label = parent.label;
      r.source = parent.source;
      r.augmented_from = parent.id;
      r.noise_seed = rng();
      result.train_ids.push_back(r.id);
      result.added.push_back(std::move(r));
    }
  }
  return result;
}

GrayImage AugmentPixels(const GrayImage& parent, double sigma, std::uint64_t noise_seed) {
  if (!(sigma > 0.0)) throw BadConfig("noise sigma must be > 0");
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, sigma);
  GrayImage out = parent;
  for (auto& px : out.data()) {
    const double v = std::round(static_cast<double>(px) + noise(rng));
    px = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

NetInput AugmentNetInput(const NetInput& parent, double sigma, std::uint64_t noise_seed) {
  return Triplicate(AugmentPixels(NetInputChannel(parent, 0), sigma, noise_seed));
}

}  // namespace ethnipipe
