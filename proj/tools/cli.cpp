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

#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "ethnipipe/cache.hpp"
#include "ethnipipe/convert.hpp"
#include "ethnipipe/dataset.hpp"
#include "ethnipipe/error.hpp"
#include "ethnipipe/evaluation.hpp"
#include "ethnipipe/model.hpp"
#include "ethnipipe/network.hpp"
#include "ethnipipe/preprocess.hpp"
#include "ethnipipe/run_config.hpp"
#include "ethnipipe/synthetic.hpp"
#include "ethnipipe/training.hpp"
#include "ethnipipe/weights.hpp"

namespace ethnipipe::cli {
namespace {

namespace fs = std::filesystem;

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
  fs::path run_dir;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> knobs;
  std::string positional;  // knob filled by a positional argument, if any
  std::function<void(Context&)> run;
};

std::vector<std::string> SplitList(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::string& Require(const RunConfig& cfg, const std::string& key) {
  const std::string& v = cfg.Get(key);
  if (v.empty()) throw BadConfig(KnobFlag(key) + " is required");
  return v;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!(f << text)) throw RuntimeFailure("cannot write " + path.string());
}

fs::path MakeRunDir(const RunConfig& cfg) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const std::string tag = cfg.Get("tag").empty() ? cfg.command() : cfg.Get("tag");
  const fs::path parent = cfg.Get("runs_dir");
  fs::path dir = parent / (std::string(stamp) + "-" + tag);
  for (int n = 2; fs::exists(dir); ++n) {
    dir = parent / (std::string(stamp) + "-" + tag + "-" + std::to_string(n));
  }
  for (const char* sub : {"config", "checkpoints", "logs", "reports"}) {
    fs::create_directories(dir / sub);
  }
  WriteText(dir / "config" / "run_config.json", cfg.ToJson().dump(2) + "\n");
  return dir;
}

std::unique_ptr<FaceDetector> MakeDetector(const RunConfig& cfg) {
  const std::string& d = cfg.Get("detector");
  if (d == "none") return std::make_unique<NullFaceDetector>();
  return CascadeFaceDetector::Load(d.empty() ? fs::path(ETHNIPIPE_DEFAULT_CASCADE) : fs::path(d));
}

PipelineOptions MakePipelineOptions(const RunConfig& cfg) {
  PipelineOptions opt;
  const auto policy = ParseNoFacePolicy(cfg.Get("policy"));
  if (!policy) throw BadConfig("--policy must be skip or center-crop");
  opt.policy = *policy;
  opt.nlm.h = cfg.GetDouble("nlm_h");
  opt.nlm.template_window = cfg.GetInt("nlm_template");
  opt.nlm.search_window = cfg.GetInt("nlm_search");
  opt.nlm.sigma = cfg.GetDouble("nlm_sigma");
  return opt;
}

TrainConfig MakeTrainConfig(const RunConfig& cfg) {
  TrainConfig t;
  t.epochs = cfg.GetInt("epochs");
  t.learning_rate = cfg.GetDouble("lr");
  t.momentum = cfg.GetDouble("momentum");
  t.batch_size = cfg.GetInt("batch_size");
  t.noise_sigma = cfg.GetDouble("sigma");
  t.seed = cfg.GetU64("seed");
  t.balance = cfg.GetBool("balance");
  t.frozen_layers = SplitList(cfg.Get("freeze"));
  t.Validate();
  return t;
}

std::vector<SplitPlan> SelectFolds(const RunConfig& cfg, std::vector<SplitPlan> plans) {
  const int fold = cfg.GetInt("fold");
  if (fold < 0) return plans;
  for (SplitPlan& p : plans) {
    if (p.fold_index == fold) return {std::move(p)};
  }
  throw BadConfig("fold " + std::to_string(fold) + " not in split file");
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ------------------------------------------------------------ commands

void CmdIngest(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path root = Require(cfg, "root");
  const LabelMap labels =
      cfg.Get("labels").empty() ? DefaultLabelMap() : ParseLabelMap(cfg.Get("labels"));
  const IngestResult result = IngestDirectory(root, labels);
  SaveManifest(cfg.Get("manifest"), result.manifest);
  std::string skipped;
  for (const auto& s : result.skipped) skipped += s + "\n";
  WriteText(ctx.run_dir / "logs" / "skipped.txt", skipped);
  ctx.out << "records\t" << result.manifest.size() << "\n";
  const ClassCounts counts = result.manifest.Counts();
  for (EthnicLabel l : kAllLabels) ctx.out << LabelName(l) << "\t" << counts[LabelCode(l)] << "\n";
  ctx.out << "skipped\t" << result.skipped.size() << "\n";
}

void CmdPreprocess(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path root = Require(cfg, "root");
  const Manifest manifest = LoadManifest(cfg.Get("manifest"));
  const PipelineOptions options = MakePipelineOptions(cfg);
  const auto detector = MakeDetector(cfg);
  const int jobs = cfg.GetInt("jobs");
  if (jobs < 1) throw BadConfig("--jobs must be >= 1");

  std::vector<const SampleRecord*> work;
  for (const auto& r : manifest.records()) {
    if (!r.augmented()) work.push_back(&r);
  }
  std::vector<std::optional<NetInput>> results(work.size());
  std::vector<std::string> reasons(work.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&](std::unique_ptr<FaceDetector> det) {
    try {
      for (std::size_t i = next++; i < work.size(); i = next++) {
        const auto image = TryDecodeImageFile(root / work[i]->path);
        if (!image) {
          reasons[i] = "undecodable";
          continue;
        }
        PipelineResult r = PreprocessImage(*image, *det, options);
        if (auto* in = std::get_if<NetInput>(&r)) {
          results[i] = std::move(*in);
        } else {
          reasons[i] = std::get<SkipMarker>(r).reason;
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = work.size();
    }
  };
  std::vector<std::thread> threads;
  for (int j = 1; j < jobs; ++j) threads.emplace_back(worker, detector->Clone());
  worker(detector->Clone());
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  PreprocessedCache cache;
  std::string skip_log;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (results[i]) {
      cache.Put(work[i]->id, std::move(*results[i]));
    } else {
      skip_log += work[i]->id + "\t" + reasons[i] + "\n";
      ++skipped;
    }
  }
  cache.Save(cfg.Get("cache"));
  WriteText(ctx.run_dir / "logs" / "skipped.tsv", skip_log);
  ctx.out << "cached\t" << cache.size() << "\n";
  ctx.out << "skipped\t" << skipped << "\n";
}

void CmdSplit(Context& ctx) {
  const auto& cfg = ctx.cfg;
  Manifest manifest = LoadManifest(cfg.Get("manifest"));
  if (cfg.Origin("cache") != KnobOrigin::kDefault) {
    // Only samples that survived preprocessing.
    const PreprocessedCache cache = PreprocessedCache::Load(cfg.Get("cache"));
    std::vector<SampleRecord> kept;
    for (const auto& r : manifest.records()) {
      if (cache.Contains(r.id)) kept.push_back(r);
    }
    manifest = Manifest(std::move(kept));
  }
  const auto plans = KFoldSplit(manifest, cfg.GetInt("k"), ParseSplitRatios(cfg.Get("ratios")),
                                cfg.GetU64("seed"));
  SaveSplitPlans(cfg.Get("split"), plans);
  for (const auto& p : plans) {
    ctx.out << "fold\t" << p.fold_index << "\t" << p.train_ids.size() << "\t"
            << p.val_ids.size() << "\t" << p.test_ids.size() << "\n";
  }
}

HyperGrid ParseGrid(const std::string& text) {
  HyperGrid grid;
  for (const std::string& entry : SplitList(text, ';')) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw BadConfig("--grid entry '" + entry + "' lacks '='");
    grid.emplace_back(entry.substr(0, eq), SplitList(entry.substr(eq + 1)));
  }
  return grid;
}

void CmdTrain(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const TrainConfig tcfg = MakeTrainConfig(cfg);
  const BackboneBlocks blocks = ParseBackbone(cfg.Get("backbone"));
  const int head_width = cfg.GetInt("head_width");
  const ModelSpec spec = BuildModelSpec(blocks, head_width);
  std::optional<WeightArchive> pretrained;
  if (!cfg.Get("weights").empty()) pretrained = WeightArchive::Load(cfg.Get("weights"));
  const Manifest manifest = LoadManifest(cfg.Get("manifest"));
  const auto plans = SelectFolds(cfg, LoadSplitPlans(cfg.Get("split")));
  const PreprocessedCache cache = PreprocessedCache::Load(cfg.Get("cache"));
  const std::uint64_t seed = cfg.GetU64("seed");
  auto init = [&](const ModelSpec& s) {
    return pretrained ? LoadBackbone(s, *pretrained, seed) : InitializeModel(s, seed);
  };
  (void)init(spec);  // fail fast on an incompatible archive

  if (!cfg.Get("grid").empty()) {
    const auto ranked = GridSearch(ParseGrid(cfg.Get("grid")), tcfg, blocks, head_width, init,
                                   plans, manifest, cache);
    std::string tsv = "rank\tmean_val_acc\tmean_val_loss\tconfig\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      tsv += std::to_string(i + 1) + "\t" + Fixed(ranked[i].mean_val_accuracy, 6) + "\t" +
             Fixed(ranked[i].mean_val_loss, 6) + "\t" + ranked[i].candidate.Serialize() + "\n";
    }
    WriteText(ctx.run_dir / "reports" / "grid.tsv", tsv);
    ctx.out << tsv;
    return;
  }

  std::string timing = "fold\tseconds\tbest_epoch\n";
  for (const SplitPlan& plan : plans) {
    const std::string f = "fold" + std::to_string(plan.fold_index);
    const auto start = std::chrono::steady_clock::now();
    TrainResult r = Train(init(spec), plan, manifest, cache, tcfg, [&](const EpochRecord& e) {
      ctx.err << f << " epoch " << e.epoch << "/" << tcfg.epochs << " train_loss "
              << Fixed(e.train_loss, 5) << " val_loss " << Fixed(e.val_loss, 5) << " val_acc "
              << Fixed(e.val_accuracy, 4) << "\n";
    });
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string origin = pretrained ? "pretrained" : "random";
    MakeCheckpoint(r.best_state, "train " + f + " best epoch " + std::to_string(r.best_epoch) +
                                     " init " + origin)
        .Save(ctx.run_dir / "checkpoints" / (f + ".best.epwa"));
    MakeCheckpoint(r.final_state, "train " + f + " final init " + origin)
        .Save(ctx.run_dir / "checkpoints" / (f + ".final.epwa"));
    WriteText(ctx.run_dir / "logs" / (f + ".jsonl"), FormatTrainLogJsonl(r.log));
    const std::string table = FormatTrainLogTable(r.log);
    WriteText(ctx.run_dir / "logs" / (f + ".txt"), table);
    std::string aug = "id\taugmented_from\tnoise_seed\n";
    for (const auto& a : r.augmented) {
      aug += a.id + "\t" + *a.augmented_from + "\t" + std::to_string(*a.noise_seed) + "\n";
    }
    WriteText(ctx.run_dir / "logs" / (f + ".augmented.tsv"), aug);
    timing += std::to_string(plan.fold_index) + "\t" + Fixed(seconds, 3) + "\t" +
              std::to_string(r.best_epoch) + "\n";
    ctx.out << "# " << f << " (best epoch " << r.best_epoch << ", " << Fixed(seconds, 1)
            << " s)\n"
            << table;
  }
  WriteText(ctx.run_dir / "logs" / "timing.tsv", timing);
}

void CmdEvaluate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ReportFormat format = ParseReportFormat(cfg.Get("format"));
  const Manifest manifest = LoadManifest(cfg.Get("manifest"));
  const auto plans = SelectFolds(cfg, LoadSplitPlans(cfg.Get("split")));
  const PreprocessedCache cache = PreprocessedCache::Load(cfg.Get("cache"));

  std::vector<fs::path> checkpoints;
  if (!cfg.Get("run").empty()) {
    for (const auto& p : plans) {
      checkpoints.push_back(fs::path(cfg.Get("run")) / "checkpoints" /
                            ("fold" + std::to_string(p.fold_index) + ".best.epwa"));
    }
  } else {
    for (const auto& c : SplitList(Require(cfg, "checkpoint"))) checkpoints.emplace_back(c);
    if (checkpoints.size() != plans.size()) {
      throw BadConfig(std::to_string(checkpoints.size()) + " checkpoint(s) given for " +
                      std::to_string(plans.size()) + " fold(s)");
    }
  }
  std::vector<FoldReport> folds;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const ModelState<float> state = LoadCheckpoint(WeightArchive::Load(checkpoints[i]));
    folds.push_back(Evaluate(state, plans[i].test_ids, manifest, cache, plans[i].fold_index,
                             cfg.GetInt("batch_size")));
  }
  const CrossValReport report = Aggregate(folds);
  const std::string table = RenderReport(report, ReportFormat::kTable);
  const std::string structured = RenderReport(report, ReportFormat::kStructured);
  WriteText(ctx.run_dir / "reports" / "report.txt", table);
  WriteText(ctx.run_dir / "reports" / "report.ethnipipe", structured);
  ctx.out << (format == ReportFormat::kTable ? table : structured);
}

void CmdPredict(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelState<float> state = LoadCheckpoint(WeightArchive::Load(Require(cfg, "checkpoint")));
  const fs::path image_path = Require(cfg, "image");
  if (!fs::exists(image_path)) throw MissingInput("image not found: " + image_path.string());
  const AnyImage image = DecodeImageFile(image_path);
  const auto detector = MakeDetector(cfg);
  PipelineResult r = PreprocessImage(image, *detector, MakePipelineOptions(cfg));
  if (auto* skip = std::get_if<SkipMarker>(&r)) {
    throw RuntimeFailure(image_path.string() + ": " + skip->reason);
  }
  const auto& input = std::get<NetInput>(r);
  const auto probs = Forward<float>(state, input.values, Mode::kEval);
  const auto best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) -
                                             probs.begin());
  ctx.out << LabelName(static_cast<EthnicLabel>(best)) << "\n";
  for (std::size_t c = 0; c < probs.size(); ++c) {
    ctx.out << LabelName(static_cast<EthnicLabel>(c)) << "\t" << Fixed(probs[c], 6) << "\n";
  }
}

void CmdBenchmark(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelState<float> state = LoadCheckpoint(WeightArchive::Load(Require(cfg, "checkpoint")));
  const PreprocessedCache cache = PreprocessedCache::Load(cfg.Get("cache"));
  const int limit = cfg.GetInt("limit");
  if (limit < 1) throw BadConfig("--limit must be >= 1");
  std::vector<NetInput> images;
  for (const std::string& id : cache.Ids()) {
    if (static_cast<int>(images.size()) == limit) break;
    images.push_back(cache.At(id));
  }
  if (images.empty()) throw MissingInput("cache holds no images");
  const LatencyStats s = BenchmarkLatency(state, images, cfg.GetInt("reps"), cfg.GetInt("warmup"));
  std::ostringstream text;
  text << "images\t" << images.size() << "\n"
       << "repetitions\t" << s.samples_ms.size() << "\n"
       << "forwards\t" << s.forwards << "\n"
       << "mean_ms\t" << Fixed(s.mean_ms, 3) << "\n"
       << "p50_ms\t" << Fixed(s.p50_ms, 3) << "\n"
       << "p95_ms\t" << Fixed(s.p95_ms, 3) << "\n"
       << "reference_ms\t10\t(published per-image figure, different hardware; context only)\n";
  WriteText(ctx.run_dir / "reports" / "benchmark.tsv", text.str());
  ctx.out << text.str();
}

void CmdConvertWeights(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const WeightArchive archive = ConvertKerasH5(Require(cfg, "input"));
  if (cfg.Origin("backbone") != KnobOrigin::kDefault) {
    (void)LoadBackbone(BuildModelSpec(ParseBackbone(cfg.Get("backbone"))), archive, 0);
  }
  const fs::path out = Require(cfg, "out");
  archive.Save(out);
  ctx.out << "tensors\t" << archive.size() << "\n";
  for (const auto& key : archive.keys()) {
    ctx.out << key << "\t" << ShapeString(archive.At(key).shape) << "\n";
  }
}

void CmdSynth(Context& ctx) {
  SyntheticOptions opt;
  opt.per_class = ctx.cfg.GetInt("per_class");
  opt.seed = ctx.cfg.GetU64("seed");
  const std::size_t n = WriteSyntheticDataset(Require(ctx.cfg, "out"), opt);
  ctx.out << "images\t" << n << "\n";
}

const std::vector<Command>& Commands() {
  static const std::vector<std::string> kNlm = {"detector", "policy", "nlm_h", "nlm_template",
                                                "nlm_search", "nlm_sigma"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  static const std::vector<std::string> kTrainKnobs = {
      "manifest", "split", "cache", "weights", "epochs", "lr", "momentum", "batch_size",
      "sigma", "seed", "backbone", "head_width", "fold", "balance", "freeze", "grid"};
  static const std::vector<Command> commands = {
      {"ingest", "Scan a labeled directory tree into a manifest",
       {"root", "labels", "manifest"}, "", CmdIngest},
      {"preprocess", "Run the normalization chain into a cache",
       with({"root", "manifest", "cache", "jobs"}, kNlm), "", CmdPreprocess},
      {"split", "Draw k stratified train/val/test splits",
       {"manifest", "cache", "k", "ratios", "seed", "split"}, "", CmdSplit},
      {"train", "Fine-tune per fold (or grid search with --grid)", kTrainKnobs, "", CmdTrain},
      {"evaluate", "Test checkpoints and render the cross-validation report",
       {"manifest", "split", "cache", "checkpoint", "run", "fold", "batch_size", "format"}, "",
       CmdEvaluate},
      {"predict", "Classify one image", with({"checkpoint", "image"}, kNlm), "image",
       CmdPredict},
      {"benchmark", "Measure per-image forward latency",
       {"checkpoint", "cache", "limit", "reps", "warmup"}, "", CmdBenchmark},
      {"convert-weights", "Convert a Keras HDF5 VGG file to a weight archive",
       {"input", "out", "backbone"}, "input", CmdConvertWeights},
      {"synth", "Write the synthetic four-class dataset", {"out", "per_class", "seed"}, "",
       CmdSynth},
  };
  return commands;
}

std::string KindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kBadConfig: return "bad_config";
    case ErrorKind::kMissingInput: return "missing_input";
    case ErrorKind::kRuntime: return "runtime";
  }
  return "runtime";
}

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kBadConfig: return 2;
    case ErrorKind::kMissingInput: return 3;
    case ErrorKind::kRuntime: return 4;
  }
  return 4;
}

std::string OneLine(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\t') c = ' ';
  }
  return s;
}

int Fail(std::ostream& err, ErrorKind kind, const std::string& message) {
  err << "error\t" << KindName(kind) << "\t" << OneLine(message) << "\n";
  return ExitCode(kind);
}

void Execute(const Command& cmd, RunConfig cfg, std::ostream& out, std::ostream& err) {
  Context ctx{std::move(cfg), out, err, {}};
  ctx.run_dir = MakeRunDir(ctx.cfg);
  err << "run\t" << ctx.run_dir.string() << "\n";
  cmd.run(ctx);
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env) {
  CLI::App app{"ethnipipe: face ethnicity classification pipeline", "ethnipipe"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (lowest precedence above defaults)");

  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, std::map<std::string, CLI::Option*>> flag_options;
  std::map<std::string, CLI::App*> subs;
  for (const Command& cmd : Commands()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sub;
    std::map<std::string, std::string> defaults;
    for (const Knob& k : AllKnobs()) defaults[k.key] = k.default_value;
    for (const std::string& key : cmd.knobs) {
      std::string help;
      for (const Knob& k : AllKnobs()) {
        if (k.key == key) help = k.help + (k.default_value.empty() ? "" : " [" + k.default_value + "]");
      }
      std::string name = KnobFlag(key);
      if (key == cmd.positional) name = key + "," + name;
      flag_options[cmd.name][key] = sub->add_option(name, flag_values[cmd.name][key], help);
    }
    sub->add_option("--runs-dir", flag_values[cmd.name]["runs_dir"], "parent of run directories [runs]");
    sub->add_option("--tag", flag_values[cmd.name]["tag"], "run directory suffix");
    flag_options[cmd.name]["runs_dir"] = sub->get_option("--runs-dir");
    flag_options[cmd.name]["tag"] = sub->get_option("--tag");
  }
  std::string replay_path;
  CLI::App* replay = app.add_subcommand("replay", "Re-run a command from its run_config.json");
  replay->add_option("config", replay_path, "run_config.json")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    return Fail(err, ErrorKind::kBadConfig, e.what());
  }

  try {
    if (replay->parsed()) {
      std::ifstream in(replay_path);
      if (!in) throw MissingInput("run config not found: " + replay_path);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw BadConfig("run config is not valid JSON: " + std::string(e.what()));
      }
      RunConfig cfg = RunConfig::FromJson(doc);
      for (const Command& cmd : Commands()) {
        if (cmd.name == cfg.command()) {
          Execute(cmd, std::move(cfg), out, err);
          return 0;
        }
      }
      throw BadConfig("run config names unknown command '" + cfg.command() + "'");
    }
    for (const Command& cmd : Commands()) {
      if (!subs[cmd.name]->parsed()) continue;
      RunConfig cfg(cmd.name);
      if (!config_path.empty()) cfg.MergeFile(fs::path(config_path));
      cfg.MergeEnvironment(env);
      for (const auto& [key, opt] : flag_options[cmd.name]) {
        if (opt->count() > 0) cfg.Set(key, flag_values[cmd.name][key]);
      }
      Execute(cmd, std::move(cfg), out, err);
      return 0;
    }
    return Fail(err, ErrorKind::kBadConfig, "no command given");
  } catch (const Error& e) {
    return Fail(err, e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    return Fail(err, ErrorKind::kRuntime, e.what());
  } catch (const std::exception& e) {
    return Fail(err, ErrorKind::kRuntime, e.what());
  }
}

}  // namespace ethnipipe::cli
