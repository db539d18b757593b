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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. `acceptance <name>` runs a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "ethnipipe/cache.hpp"
#include "ethnipipe/dataset.hpp"
#include "ethnipipe/evaluation.hpp"
#include "ethnipipe/loss.hpp"
#include "ethnipipe/model.hpp"
#include "ethnipipe/network.hpp"
#include "ethnipipe/preprocess.hpp"
#include "ethnipipe/training.hpp"
#include "ethnipipe/weights.hpp"
#include "h5_writer.hpp"
#include "test_support.hpp"

namespace ethnipipe {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed condition; the first few are kept in the detail text.
  void Expect(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail << "failed: ";
    else detail << "; ";
    detail << what;
    pass = false;
  }
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
  fs::path run_dir;
};

CliResult Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::Run(args, out, err, [](const char*) -> const char* { return nullptr; });
  r.out = out.str();
  r.err = err.str();
  const auto pos = r.err.find("run\t");
  if (pos != std::string::npos) {
    const auto end = r.err.find('\n', pos);
    r.run_dir = r.err.substr(pos + 4, end - pos - 4);
  }
  return r;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Value of a "key\tvalue" line, empty when absent.
std::string Field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "\t", 0) == 0) {
      std::string rest = line.substr(key.size() + 1);
      return rest.substr(0, rest.find('\t'));
    }
  }
  return "";
}

// ------------------------------------------------------------ criteria

Outcome PreprocessingInvariants() {
  Outcome o;
  const auto start = Clock::now();
  const auto detector = CascadeFaceDetector::Load(ETHNIPIPE_CASCADE_PATH);
  PipelineOptions opt;
  opt.policy = NoFacePolicy::kCenterCrop;
  std::mt19937_64 rng(20260415);
  std::uniform_int_distribution<int> side(16, 320);
  int bad_shape = 0, bad_range = 0, bad_channels = 0;
  for (int i = 0; i < 200; ++i) {
    const int h = side(rng), w = side(rng);
    const AnyImage image = i % 2 ? AnyImage(testing::RandomRgb(h, w, rng))
                                 : AnyImage(testing::RandomGray(h, w, rng));
    const PipelineResult r = PreprocessImage(image, *detector, opt);
    const auto* in = std::get_if<NetInput>(&r);
    if (!in || in->values.size() != kNetInputSize) {
      ++bad_shape;
      continue;
    }
    for (std::size_t p = 0; p < kNetInputSize; p += 3) {
      const float a = in->values[p], b = in->values[p + 1], c = in->values[p + 2];
      if (!(a >= 0.0f && a <= 1.0f)) ++bad_range;
      if (a != b || a != c) ++bad_channels;
    }
  }
  o.Expect(bad_shape == 0, std::to_string(bad_shape) + " outputs not 80x80x3");
  o.Expect(bad_range == 0, std::to_string(bad_range) + " values outside [0,1]");
  o.Expect(bad_channels == 0, std::to_string(bad_channels) + " pixels with unequal channels");

  int constant_changed = 0;
  for (int level : {0, 1, 77, 128, 254, 255}) {
    for (int s : {17, 80, 203}) {
      const GrayImage flat(s, s + 5, std::vector<std::uint8_t>(static_cast<std::size_t>(s) * (s + 5),
                                                                static_cast<std::uint8_t>(level)));
      const GrayImage resized = Resize80(flat);
      const GrayImage denoised = DenoiseNlm(resized, NlmParams{});
      for (std::uint8_t v : resized.data()) constant_changed += v != level;
      for (std::uint8_t v : denoised.data()) constant_changed += v != level;
    }
  }
  o.Expect(constant_changed == 0, "constant input changed by resize/denoise");
  const double secs = Seconds(start);
  o.Expect(secs < 60.0, "runtime " + Num(secs, 1) + " s >= 60 s");
  o.detail << (o.pass ? "" : " | ") << "200 images, " << Num(secs, 1) << " s";
  return o;
}

Outcome ArchitectureArithmetic() {
  Outcome o;
  const ModelSpec spec = BuildModelSpec();
  const ParamSummary s = SummarizeSpec(spec);
  o.Expect(spec.BackboneOutput() == FeatureShape{2, 2, 512}, "backbone output is not (2,2,512)");
  o.Expect(spec.layer("flatten").output.size() == 2048, "flatten is not 2048");
  o.Expect(s.head == 1026504, "head params " + std::to_string(s.head));
  o.Expect(s.backbone == 14714688, "backbone params " + std::to_string(s.backbone));
  o.Expect(s.total == 15741192, "total params " + std::to_string(s.total));
  o.detail << (o.pass ? "" : " | ") << "backbone " << s.backbone << ", head " << s.head
           << ", total " << s.total;
  return o;
}

Outcome GradientCheckCriterion() {
  Outcome o;
  const auto start = Clock::now();
  // 2 conv + pool + FC-500 + softmax-4
  const ModelSpec spec = BuildModelSpec({{4, 4}}, 500);
  ModelState<double> state = CastState<double>(InitializeModel(spec, 17));
  state.norm.mean = {0.5f, 0.5f, 0.5f};
  state.norm.stddev = {0.29f, 0.29f, 0.29f};
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> batch(2 * kNetInputSize);
  for (double& v : batch) v = u(rng);
  const std::vector<int> labels = {1, 3};

  const auto coords = SampleCoordinates(state, 480, 6, false);
  const GradientCheckResult r = GradientCheck(state, batch, labels, 1e-3, coords);
  o.Expect(r.checked >= 200, "only " + std::to_string(r.checked) + " smooth coordinates");
  o.Expect(r.max_relative_error < 1e-3, "max relative error " + std::to_string(r.max_relative_error));

  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_int_distribution<int> lab(0, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int b = 1 + trial % 7;
    std::vector<double> logits(static_cast<std::size_t>(b) * 4);
    for (double& v : logits) v = n(rng);
    std::vector<int> y(static_cast<std::size_t>(b));
    for (int& l : y) l = lab(rng);
    const auto p = Softmax<double>(logits, 4);
    const auto closed = SoftmaxCrossEntropyLogitGrad<double>(p, y, 4);
    const auto chain = SoftmaxBackward<double>(p, CrossEntropyProbGrad<double>(p, y, 4), 4);
    for (std::size_t i = 0; i < closed.size(); ++i) {
      const double direct = (p[i] - (y[i / 4] == static_cast<int>(i % 4))) / b;
      worst = std::max({worst, std::abs(closed[i] - chain[i]), std::abs(closed[i] - direct)});
    }
  }
  o.Expect(worst < 1e-6, "logit-gradient identity off by " + std::to_string(worst));
  const double secs = Seconds(start);
  o.Expect(secs < 120.0, "runtime " + Num(secs, 1) + " s >= 120 s");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu scored of %zu sampled, max rel err %.3g, identity %.3g, %.1f s",
                r.checked, coords.size(), r.max_relative_error, worst, secs);
  o.detail << (o.pass ? "" : " | ") << buf;
  return o;
}

Outcome SplitProtocol() {
  Outcome o;
  const auto start = Clock::now();
  const Manifest m = testing::CountsManifest({310, 240, 260, 190});
  const SplitRatios ratios{0.75, 0.10, 0.15};
  const auto plans = KFoldSplit(m, 10, ratios, 2026);
  o.Expect(plans.size() == 10, "expected 10 folds");
  const ClassCounts total = m.Counts();
  int off = 0, overlap = 0, uncovered = 0;
  for (const SplitPlan& p : plans) {
    std::set<std::string> seen;
    const double r[3] = {ratios.train, ratios.val, ratios.test};
    int si = 0;
    for (Subset s : {Subset::kTrain, Subset::kVal, Subset::kTest}) {
      for (const auto& id : p.ids(s)) overlap += !seen.insert(id).second;
      const ClassCounts c = m.Counts(p.ids(s));
      for (int k = 0; k < kNumClasses; ++k) {
        off += std::abs(static_cast<double>(c[k]) - total[k] * r[si]) > 1.0 + 1e-9;
      }
      ++si;
    }
    uncovered += static_cast<int>(m.size() - seen.size());
  }
  o.Expect(off == 0, std::to_string(off) + " class/subset counts off by more than 1");
  o.Expect(overlap == 0, "subsets overlap");
  o.Expect(uncovered == 0, "subsets do not cover the manifest");

  testing::TempDir dir;
  SaveSplitPlans(dir / "a.tsv", plans);
  SaveSplitPlans(dir / "b.tsv", KFoldSplit(m, 10, ratios, 2026));
  const std::string a = Slurp(dir / "a.tsv");
  o.Expect(!a.empty() && a == Slurp(dir / "b.tsv"), "second run is not byte-identical");
  o.Expect(LoadSplitPlans(dir / "a.tsv") == plans, "split file does not round-trip");
  const double secs = Seconds(start);
  o.Expect(secs < 10.0, "runtime " + Num(secs, 2) + " s >= 10 s");
  o.detail << (o.pass ? "" : " | ") << "1000 records, k=10, " << a.size() << " bytes, "
           << Num(secs, 2) << " s";
  return o;
}

Outcome Balancing() {
  Outcome o;
  const auto start = Clock::now();
  const Manifest m = testing::CountsManifest({50, 30, 50, 40});
  const PreprocessedCache cache = testing::RandomCache(m, 5);
  std::vector<std::string> ids;
  for (const auto& r : m.records()) ids.push_back(r.id);
  const double sigma = 5.0;
  const BalanceResult b = BalanceClasses(m, ids, sigma, 31);
  o.Expect(b.added.size() == 30, std::to_string(b.added.size()) + " augmented records");
  const Manifest grown = m.WithAdded(b.added);
  o.Expect(grown.Counts(b.train_ids) == ClassCounts{50, 50, 50, 50}, "post-balancing counts not 50 each");

  const SampleSource source(grown, cache, sigma);
  int mismatched = 0, unchanged = 0;
  for (const SampleRecord& r : b.added) {
    const NetInput& parent = cache.At(*r.augmented_from);
    const NetInput again = AugmentNetInput(parent, sigma, *r.noise_seed);
    mismatched += !(source.Input(r.id) == again);
    mismatched += !(AugmentNetInput(parent, sigma, *r.noise_seed) == again);
    unchanged += again == parent;
  }
  o.Expect(mismatched == 0, std::to_string(mismatched) + " regenerations differ");
  o.Expect(unchanged == 0, "an augmented sample equals its parent");
  const double secs = Seconds(start);
  o.Expect(secs < 30.0, "runtime " + Num(secs, 2) + " s >= 30 s");
  o.detail << (o.pass ? "" : " | ") << b.added.size()
           << " augmented, regenerated bit-identically, " << Num(secs, 2) << " s";
  return o;
}

// synth -> ingest -> preprocess -> split; returns the data directory.
struct PreparedData {
  fs::path dir;
  bool ok = true;
  std::string failure;
};

PreparedData PrepareSynthetic(const fs::path& dir, int per_class, int k) {
  PreparedData d;
  d.dir = dir;
  const std::string runs = (dir / "runs").string();
  auto step = [&](std::vector<std::string> args) {
    if (!d.ok) return;
    args.insert(args.end(), {"--runs-dir", runs});
    const CliResult r = Cli(args);
    if (r.code != 0) {
      d.ok = false;
      d.failure = args[0] + " exited " + std::to_string(r.code) + ": " + r.err;
    }
  };
  const std::string images = (dir / "images").string();
  const std::string manifest = (dir / "manifest.tsv").string();
  const std::string cache = (dir / "cache.epp").string();
  step({"synth", "--out", images, "--per-class", std::to_string(per_class), "--seed", "7"});
  step({"ingest", "--root", images, "--manifest", manifest});
  step({"preprocess", "--root", images, "--manifest", manifest, "--cache", cache, "--policy",
        "center-crop"});
  step({"split", "--manifest", manifest, "--cache", cache, "--k", std::to_string(k), "--seed", "3",
        "--split", (dir / "split.tsv").string()});
  return d;
}

std::vector<std::string> DataFlags(const fs::path& dir) {
  return {"--manifest", (dir / "manifest.tsv").string(), "--cache", (dir / "cache.epp").string(),
          "--split", (dir / "split.tsv").string(), "--runs-dir", (dir / "runs").string()};
}

const char* kSurrogate = "8/16/32";

Outcome SyntheticEndToEnd() {
  Outcome o;
  const auto start = Clock::now();
  testing::TempDir dir;
  const PreparedData data = PrepareSynthetic(dir.path(), 100, 3);
  o.Expect(data.ok, data.failure);
  if (!o.pass) return o;
  const double prep = Seconds(start);

  std::vector<std::string> train = {"train", "--backbone", kSurrogate, "--head-width", "64",
                                    "--epochs", "5", "--lr", "0.01", "--seed", "7", "--tag", "e2e"};
  for (const auto& f : DataFlags(dir.path())) train.push_back(f);
  const CliResult t = Cli(train);
  o.Expect(t.code == 0, "train exited " + std::to_string(t.code) + ": " + t.err);
  if (!o.pass) return o;

  std::vector<std::string> eval = {"evaluate", "--run", t.run_dir.string()};
  for (const auto& f : DataFlags(dir.path())) eval.push_back(f);
  const CliResult e = Cli(eval);
  o.Expect(e.code == 0, "evaluate exited " + std::to_string(e.code) + ": " + e.err);
  if (!o.pass) return o;

  const CrossValReport report = ParseStructuredReport(Slurp(e.run_dir / "reports" / "report.ethnipipe"));
  const std::string table = Slurp(e.run_dir / "reports" / "report.txt");
  std::size_t images = 0;
  for (const auto& f : report.folds) images += f.confusion.Total();
  o.Expect(report.folds.size() == 3, "report has " + std::to_string(report.folds.size()) + " folds");
  o.Expect(table.rfind("Fold | African | Asian | Caucasian | Indian | Total Success rate | Total Loss", 0) == 0,
           "table header missing");
  o.Expect(table.find("\nAll | ") != std::string::npos, "table lacks the pooled row");
  o.Expect(report.aggregate.total_accuracy >= 0.95,
           "pooled accuracy " + Num(report.aggregate.total_accuracy));
  const double secs = Seconds(start);
  o.Expect(secs < 900.0, "runtime " + Num(secs, 0) + " s >= 900 s");
  o.detail << (o.pass ? "" : " | ") << "pooled accuracy " << Num(report.aggregate.total_accuracy)
           << " over " << images << " test images, row [" << RenderSummaryRow(report.aggregate)
           << "], prep " << Num(prep, 1) << " s, total " << Num(secs, 1) << " s";
  return o;
}

Outcome MetricArithmetic() {
  Outcome o;
  ConfusionMatrix cm;
  const int rows[4][4] = {{9, 1, 0, 0}, {0, 10, 0, 0}, {0, 0, 10, 0}, {0, 0, 2, 8}};
  for (int t = 0; t < 4; ++t)
    for (int p = 0; p < 4; ++p)
      for (int n = 0; n < rows[t][p]; ++n) cm.Add(t, p);
  const FoldReport r = MakeFoldReport(0, cm, 0.1);
  o.Expect(r.class_accuracy == std::array<double, 4>{0.9, 1.0, 1.0, 0.8}, "per-class accuracy");
  o.Expect(r.total_accuracy == 0.925, "total accuracy " + std::to_string(r.total_accuracy));

  FoldReport published;
  published.class_accuracy = {0.9902, 0.9976, 0.9918, 0.9672};
  published.total_accuracy = 0.9918;
  published.mean_loss = 0.03518;
  const std::string row = RenderSummaryRow(published);
  o.Expect(row == "99.02% | 99.76% | 99.18% | 96.72% | 99.18% | 0.03518", "rendered '" + row + "'");
  o.detail << (o.pass ? "" : " | ") << "(0.9, 1.0, 1.0, 0.8) / 0.925, row [" << row << "]";
  return o;
}

Outcome Determinism() {
  Outcome o;
  const testing::SyntheticSet set = testing::MakeSyntheticSet(12, 4);
  const auto plans = KFoldSplit(set.manifest, 2, {0.75, 0.10, 0.15}, 9);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 8;
  cfg.seed = 11;
  const ModelSpec spec = BuildModelSpec({{4}, {8}}, 16);
  auto run = [&] { return Train(InitializeModel(spec, 3), plans[0], set.manifest, set.cache, cfg); };
  const TrainResult a = run();
  const TrainResult b = run();
  o.Expect(a.log.SameMetrics(b.log), "train logs differ");
  o.Expect(MakeCheckpoint(a.final_state, "x").Serialize() == MakeCheckpoint(b.final_state, "x").Serialize(),
           "final checkpoints differ");
  o.Expect(MakeCheckpoint(a.best_state, "x").Serialize() == MakeCheckpoint(b.best_state, "x").Serialize(),
           "best checkpoints differ");
  o.Expect(a.augmented == b.augmented, "augmented records differ");
  o.detail << (o.pass ? "" : " | ") << a.log.epochs.size() << " epochs, logs and checkpoints identical";
  return o;
}

Outcome LatencyBenchmark() {
  Outcome o;
  testing::TempDir dir;
  // Full-size architecture; random weights are fine for timing.
  MakeCheckpoint(InitializeModel(BuildModelSpec(), 1), "benchmark").Save(dir / "vgg16.epwa");
  std::mt19937_64 rng(2);
  PreprocessedCache cache;
  for (int i = 0; i < 4; ++i) cache.Put("img" + std::to_string(i), testing::RandomNetInput(rng));
  cache.Save(dir / "cache.epp");
  const CliResult r = Cli({"benchmark", "--checkpoint", (dir / "vgg16.epwa").string(), "--cache",
                           (dir / "cache.epp").string(), "--limit", "4", "--reps", "5", "--warmup",
                           "1", "--runs-dir", (dir / "runs").string()});
  o.Expect(r.code == 0, "benchmark exited " + std::to_string(r.code) + ": " + r.err);
  const std::string mean = Field(r.out, "mean_ms"), p50 = Field(r.out, "p50_ms"),
                    p95 = Field(r.out, "p95_ms"), ref = Field(r.out, "reference_ms");
  o.Expect(!mean.empty() && !p50.empty() && !p95.empty(), "mean/p50/p95 missing");
  o.Expect(ref == "10", "reference figure missing");
  if (o.pass) {
    o.Expect(std::stod(p50) > 0 && std::stod(p50) <= std::stod(p95), "p50 > p95");
    o.Expect(fs::exists(r.run_dir / "reports" / "benchmark.tsv"), "benchmark.tsv not written");
  }
  o.detail << (o.pass ? "" : " | ") << "VGG16 80x80 per image: mean " << mean << " ms, p50 " << p50
           << " ms, p95 " << p95 << " ms (published ~10 ms on other hardware; not asserted)";
  return o;
}

Outcome TransferVsScratch() {
  Outcome o;
  testing::TempDir dir;
  const PreparedData data = PrepareSynthetic(dir.path(), 40, 2);
  o.Expect(data.ok, data.failure);
  if (!o.pass) return o;

  // Stand-in for pretrained weights: a surrogate trained on the synthetic
  // set, written out in the Keras h5 layout and converted with the CLI.
  const Manifest manifest = LoadManifest(dir / "manifest.tsv");
  const PreprocessedCache cache = PreprocessedCache::Load(dir / "cache.epp");
  const auto plans = LoadSplitPlans(dir / "split.tsv");
  TrainConfig pre;
  pre.epochs = 2;
  pre.learning_rate = 0.01;
  pre.batch_size = 16;
  pre.seed = 99;
  const ModelSpec spec = BuildModelSpec(ParseBackbone(kSurrogate), 64);
  const TrainResult pretrained = Train(InitializeModel(spec, 99), plans[1], manifest, cache, pre);
  {
    testing::H5Writer h5(dir / "surrogate_notop.h5");
    for (const auto& p : pretrained.final_state.params) {
      if (spec.layer(p.layer).head) continue;
      // conv<B>_<J>.kernel -> block<B>_conv<J>/block<B>_conv<J>/kernel:0
      const std::string layer = p.layer.substr(4);
      const std::string keras = "block" + layer.substr(0, layer.find('_')) + "_conv" +
                                layer.substr(layer.find('_') + 1);
      const std::string leaf = p.name.substr(p.name.find('.') + 1);
      h5.Write(keras + "/" + keras + "/" + leaf + ":0", p.value);
    }
  }
  const CliResult conv = Cli({"convert-weights", (dir / "surrogate_notop.h5").string(), "--out",
                              (dir / "surrogate.epwa").string(), "--backbone", kSurrogate,
                              "--runs-dir", (dir / "runs").string()});
  o.Expect(conv.code == 0, "convert-weights exited " + std::to_string(conv.code) + ": " + conv.err);
  if (!o.pass) return o;

  auto train = [&](bool from_pretrained) {
    std::vector<std::string> args = {"train", "--backbone", kSurrogate, "--head-width", "64",
                                     "--epochs", "3", "--lr", "0.01", "--fold", "0",
                                     "--tag", from_pretrained ? "pretrained" : "scratch"};
    if (from_pretrained) args.insert(args.end(), {"--weights", (dir / "surrogate.epwa").string()});
    for (const auto& f : DataFlags(dir.path())) args.push_back(f);
    return Cli(args);
  };
  const CliResult warm = train(true);
  const CliResult cold = train(false);
  o.Expect(warm.code == 0, "pretrained run exited " + std::to_string(warm.code) + ": " + warm.err);
  o.Expect(cold.code == 0, "random-init run exited " + std::to_string(cold.code) + ": " + cold.err);
  if (!o.pass) return o;

  const std::string warm_log = Slurp(warm.run_dir / "logs" / "fold0.jsonl");
  const std::string cold_log = Slurp(cold.run_dir / "logs" / "fold0.jsonl");
  const auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  o.Expect(lines(warm_log) == 3 && lines(cold_log) == 3, "logs do not both hold 3 epochs");
  const std::string warm_time = Slurp(warm.run_dir / "logs" / "timing.tsv");
  const std::string cold_time = Slurp(cold.run_dir / "logs" / "timing.tsv");
  const std::string warm_s = Field(warm_time, "0"), cold_s = Field(cold_time, "0");
  auto first_val_acc = [](const std::string& jsonl) {
    const auto doc = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
    return doc["val_acc"].is_number() ? doc["val_acc"].get<double>() : -1.0;
  };
  o.detail << (o.pass ? "" : " | ") << "pretrained " << warm_s << " s (epoch-1 val_acc "
           << Num(first_val_acc(warm_log), 3) << "), random init " << cold_s << " s (epoch-1 val_acc "
           << Num(first_val_acc(cold_log), 3)
           << ") for 3 epochs; published 4.5 h vs 11.5 h reported, not asserted";
  return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& Criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
      {"preprocessing_invariants", PreprocessingInvariants},
      {"architecture_arithmetic", ArchitectureArithmetic},
      {"gradient_check", GradientCheckCriterion},
      {"split_protocol", SplitProtocol},
      {"balancing", Balancing},
      {"synthetic_end_to_end", SyntheticEndToEnd},
      {"metric_arithmetic", MetricArithmetic},
      {"determinism", Determinism},
      {"latency_benchmark", LatencyBenchmark},
      {"transfer_vs_scratch", TransferVsScratch},
  };
  return all;
}

}  // namespace
}  // namespace ethnipipe

int main(int argc, char** argv) {
  using namespace ethnipipe;
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0, ran = 0;
  for (const auto& [name, run] : Criteria()) {
    if (!only.empty() && !only.count(name)) continue;
    ++ran;
    bool pass = false;
    std::string detail;
    try {
      Outcome o = run();
      pass = o.pass;
      detail = o.detail.str();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << "\t" << name << "\t" << detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion matched\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
