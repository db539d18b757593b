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

#include "ethnipipe/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "ethnipipe/error.hpp"
#include "ethnipipe/loss.hpp"
#include "ethnipipe/network.hpp"

namespace ethnipipe {

void ConfusionMatrix::Add(int truth, int predicted) {
  if (truth < 0 || truth >= kNumClasses || predicted < 0 || predicted >= kNumClasses) {
    throw BadConfig("confusion matrix class out of range");
  }
  ++counts[truth][predicted];
}

std::uint64_t ConfusionMatrix::Total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::uint64_t ConfusionMatrix::Trace() const {
  std::uint64_t t = 0;
  for (int c = 0; c < kNumClasses; ++c) t += counts[c][c];
  return t;
}

std::uint64_t ConfusionMatrix::RowSum(int truth) const {
  const auto& row = counts.at(static_cast<std::size_t>(truth));
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

double ConfusionMatrix::Recall(int truth) const {
  const std::uint64_t n = RowSum(truth);
  return n == 0 ? 0.0 : static_cast<double>(counts[truth][truth]) / static_cast<double>(n);
}

double ConfusionMatrix::Accuracy() const {
  const std::uint64_t n = Total();
  return n == 0 ? 0.0 : static_cast<double>(Trace()) / static_cast<double>(n);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (int r = 0; r < kNumClasses; ++r) {
    for (int c = 0; c < kNumClasses; ++c) counts[r][c] += other.counts[r][c];
  }
  return *this;
}

FoldReport MakeFoldReport(int fold_index, const ConfusionMatrix& confusion, double mean_loss) {
  FoldReport r;
  r.fold_index = fold_index;
  r.confusion = confusion;
  for (int c = 0; c < kNumClasses; ++c) r.class_accuracy[c] = confusion.Recall(c);
  r.total_accuracy = confusion.Accuracy();
  r.mean_loss = mean_loss;
  return r;
}

FoldReport EvaluatePredictions(int fold_index, std::span<const int> labels,
                               std::span<const float> probs) {
  if (probs.size() != labels.size() * kNumClasses) {
    throw BadConfig("prediction matrix does not match label count");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const float* row = probs.data() + i * kNumClasses;
    cm.Add(labels[i], static_cast<int>(std::max_element(row, row + kNumClasses) - row));
  }
  const double loss = labels.empty() ? 0.0 : CrossEntropy<float>(probs, labels, kNumClasses);
  return MakeFoldReport(fold_index, cm, loss);
}

FoldReport Evaluate(const ModelState<float>& state, const std::vector<std::string>& test_ids,
                    const Manifest& manifest, const PreprocessedCache& cache, int fold_index,
                    int batch_size) {
  if (batch_size < 1) throw BadConfig("batch size must be >= 1");
  for (const std::string& id : test_ids) {
    if (manifest.At(id).augmented()) {
      throw BadConfig("augmented record '" + id + "' in test subset");
    }
    if (!cache.Contains(id)) throw MissingInput("cache miss for id '" + id + "'");
  }
  ConfusionMatrix cm;
  double loss_sum = 0.0;
  std::vector<float> inputs;
  std::vector<int> labels;
  for (std::size_t s = 0; s < test_ids.size(); s += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min<std::size_t>(batch_size, test_ids.size() - s);
    inputs.resize(n * kNetInputSize);
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = cache.At(test_ids[s + i]).values;
      std::copy(v.begin(), v.end(), inputs.begin() + static_cast<std::ptrdiff_t>(i * kNetInputSize));
      labels[i] = LabelCode(manifest.At(test_ids[s + i]).label);
    }
    const auto probs = Forward<float>(state, inputs, Mode::kEval);
    const FoldReport part = EvaluatePredictions(fold_index, labels, probs);
    cm += part.confusion;
    loss_sum += part.mean_loss * static_cast<double>(n);
  }
  const double mean = test_ids.empty() ? 0.0 : loss_sum / static_cast<double>(test_ids.size());
  return MakeFoldReport(fold_index, cm, mean);
}

CrossValReport Aggregate(const std::vector<FoldReport>& folds) {
  if (folds.empty()) throw BadConfig("cannot aggregate zero folds");
  CrossValReport out;
  out.folds = folds;
  ConfusionMatrix pooled;
  double loss_sum = 0.0;
  for (const FoldReport& f : folds) {
    pooled += f.confusion;
    loss_sum += f.mean_loss * static_cast<double>(f.confusion.Total());
  }
  const std::uint64_t n = pooled.Total();
  double mean_loss = 0.0;
  if (n > 0) {
    mean_loss = loss_sum / static_cast<double>(n);
  } else {
    for (const FoldReport& f : folds) mean_loss += f.mean_loss;
    mean_loss /= static_cast<double>(folds.size());
  }
  // One fold, or identical folds, reproduce the fold's loss bit for bit.
  if (std::all_of(folds.begin(), folds.end(),
                  [&](const FoldReport& f) { return f.mean_loss == folds.front().mean_loss; })) {
    mean_loss = folds.front().mean_loss;
  }
  out.aggregate = MakeFoldReport(-1, pooled, mean_loss);
  return out;
}

ReportFormat ParseReportFormat(const std::string& text) {
  if (text == "table") return ReportFormat::kTable;
  if (text == "structured") return ReportFormat::kStructured;
  throw BadConfig("unknown report format '" + text + "' (expected table or structured)");
}

namespace {

std::string Percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
  return buf;
}

std::string Exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw BadConfig("report: bad number '" + s + "'");
  }
  return v;
}

std::uint64_t ParseCount(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw BadConfig("report: bad count '" + s + "'");
  }
  return v;
}

void WriteBlock(std::ostringstream& out, const FoldReport& r) {
  out << "fold_index\t" << r.fold_index << "\n";
  for (int c = 0; c < kNumClasses; ++c) {
    out << "accuracy." << kLabelNames[c] << "\t" << Exact(r.class_accuracy[c]) << "\n";
  }
  out << "total_accuracy\t" << Exact(r.total_accuracy) << "\n";
  out << "test_loss\t" << Exact(r.mean_loss) << "\n";
  out << "samples\t" << r.confusion.Total() << "\n";
  for (int t = 0; t < kNumClasses; ++t) {
    out << "confusion." << kLabelNames[t] << "\t";
    for (int p = 0; p < kNumClasses; ++p) {
      out << (p ? " " : "") << r.confusion.counts[t][p];
    }
    out << "\n";
  }
}

}  // namespace

std::string RenderSummaryRow(const FoldReport& row) {
  std::string out;
  for (int c = 0; c < kNumClasses; ++c) out += Percent(row.class_accuracy[c]) + " | ";
  char loss[32];
  std::snprintf(loss, sizeof loss, "%.5f", row.mean_loss);
  return out + Percent(row.total_accuracy) + " | " + loss;
}

std::string RenderReport(const CrossValReport& report, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kTable) {
    out << "Fold | African | Asian | Caucasian | Indian | Total Success rate | Total Loss\n";
    for (const FoldReport& f : report.folds) {
      out << f.fold_index << " | " << RenderSummaryRow(f) << "\n";
    }
    out << "All | " << RenderSummaryRow(report.aggregate) << "\n";
    out << "(loss: mean test cross-entropy, pooled over folds)\n";
    return out.str();
  }
  out << kReportHeader << "\n";
  out << "loss_kind\ttest-pooled-cross-entropy\n";
  out << "folds\t" << report.folds.size() << "\n";
  for (const FoldReport& f : report.folds) {
    out << "[fold]\n";
    WriteBlock(out, f);
  }
  out << "[aggregate]\n";
  WriteBlock(out, report.aggregate);
  return out.str();
}

CrossValReport ParseStructuredReport(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw BadConfig("report: missing '" + std::string(kReportHeader) + "' header");
  }
  CrossValReport report;
  FoldReport* current = nullptr;
  std::size_t declared = 0;
  bool have_aggregate = false;
  std::map<std::string, int> class_of;
  for (int c = 0; c < kNumClasses; ++c) class_of[std::string(kLabelNames[c])] = c;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "[fold]") {
      report.folds.emplace_back();
      current = &report.folds.back();
      continue;
    }
    if (line == "[aggregate]") {
      if (have_aggregate) throw BadConfig("report: duplicate aggregate block");
      have_aggregate = true;
      current = &report.aggregate;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw BadConfig("report: malformed line '" + line + "'");
    const std::string key = line.substr(0, tab);
    const std::string value = line.substr(tab + 1);
    if (current == nullptr) {
      if (key == "folds") {
        declared = ParseCount(value);
      } else if (key != "loss_kind") {
        throw BadConfig("report: unknown key '" + key + "'");
      }
      continue;
    }
    if (key == "fold_index") {
      current->fold_index = std::stoi(value);
    } else if (key == "total_accuracy") {
      current->total_accuracy = ParseDouble(value);
    } else if (key == "test_loss") {
      current->mean_loss = ParseDouble(value);
    } else if (key == "samples") {
      (void)ParseCount(value);
    } else if (key.starts_with("accuracy.") && class_of.count(key.substr(9))) {
      current->class_accuracy[class_of[key.substr(9)]] = ParseDouble(value);
    } else if (key.starts_with("confusion.") && class_of.count(key.substr(10))) {
      std::istringstream cells(value);
      auto& row = current->confusion.counts[class_of[key.substr(10)]];
      for (auto& cell : row) {
        std::string tok;
        if (!(cells >> tok)) throw BadConfig("report: short confusion row");
        cell = ParseCount(tok);
      }
    } else {
      throw BadConfig("report: unknown key '" + key + "'");
    }
  }
  if (!have_aggregate) throw BadConfig("report: missing aggregate block");
  if (report.folds.size() != declared) throw BadConfig("report: fold count mismatch");
  return report;
}

LatencyStats ComputeLatencyStats(std::vector<double> samples_ms) {
  LatencyStats stats;
  stats.samples_ms = samples_ms;
  if (samples_ms.empty()) return stats;
  stats.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) /
                  static_cast<double>(samples_ms.size());
  std::sort(samples_ms.begin(), samples_ms.end());
  auto pct = [&](double q) {
    const double pos = q * static_cast<double>(samples_ms.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, samples_ms.size() - 1);
    return samples_ms[lo] + (pos - static_cast<double>(lo)) * (samples_ms[hi] - samples_ms[lo]);
  };
  stats.p50_ms = pct(0.50);
  stats.p95_ms = pct(0.95);
  return stats;
}

LatencyStats BenchmarkLatency(const std::function<void()>& run_once, int repetitions,
                              int warmup) {
  if (repetitions < 1) throw BadConfig("repetitions must be >= 1");
  if (warmup < 0) throw BadConfig("warmup must be >= 0");
  for (int i = 0; i < warmup; ++i) run_once();
  std::vector<double> samples;
  for (int i = 0; i < repetitions; ++i) {
    const auto start = std::chrono::steady_clock::now();
    run_once();
    samples.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count());
  }
  LatencyStats stats = ComputeLatencyStats(std::move(samples));
  stats.forwards = static_cast<std::size_t>(warmup + repetitions);
  return stats;
}

LatencyStats BenchmarkLatency(const ModelState<float>& state, std::span<const NetInput> images,
                              int repetitions, int warmup) {
  if (images.empty()) throw BadConfig("benchmark needs at least one image");
  std::size_t forwards = 0;
  LatencyStats stats = BenchmarkLatency(
      [&] {
        for (const NetInput& img : images) {
          (void)Forward<float>(state, img.values, Mode::kEval);
          ++forwards;
        }
      },
      repetitions, warmup);
  for (double& s : stats.samples_ms) s /= static_cast<double>(images.size());
  LatencyStats per_image = ComputeLatencyStats(stats.samples_ms);
  per_image.forwards = forwards;
  return per_image;
}

}  // namespace ethnipipe
