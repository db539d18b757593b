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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ethnipipe/dataset.hpp"
#include "ethnipipe/model.hpp"
#include "ethnipipe/weights.hpp"
#include "test_support.hpp"

namespace ethnipipe {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
  fs::path run_dir;
};

CliResult Cli(const std::vector<std::string>& args, const std::map<std::string, std::string>& env = {}) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::Run(args, out, err, [&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  });
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

std::size_t Folds(const fs::path& split) { return LoadSplitPlans(split).size(); }

}  // namespace

TEST_CASE("split is byte-identical across runs and replay reproduces it") {
  testing::TempDir dir;
  SaveManifest(dir / "m.tsv", testing::CountsManifest({40, 25, 31, 18}));
  const std::string runs = (dir / "runs").string();
  const CliResult a = Cli({"split", "--manifest", (dir / "m.tsv").string(), "--k", "4", "--seed",
                           "5", "--split", (dir / "a.tsv").string(), "--runs-dir", runs});
  const CliResult b = Cli({"split", "--manifest", (dir / "m.tsv").string(), "--k", "4", "--seed",
                           "5", "--split", (dir / "b.tsv").string(), "--runs-dir", runs});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(Slurp(dir / "a.tsv") == Slurp(dir / "b.tsv"));
  CHECK(a.run_dir != b.run_dir);
  for (const char* sub : {"config", "checkpoints", "logs", "reports"}) {
    CHECK(fs::is_directory(a.run_dir / sub));
  }

  const std::string first = Slurp(dir / "a.tsv");
  fs::remove(dir / "a.tsv");
  const CliResult replay = Cli({"replay", (a.run_dir / "config" / "run_config.json").string()});
  REQUIRE(replay.code == 0);
  CHECK(Slurp(dir / "a.tsv") == first);
  CHECK(replay.out == a.out);
}

TEST_CASE("flags beat environment beat config file") {
  testing::TempDir dir;
  SaveManifest(dir / "m.tsv", testing::CountsManifest({12, 12, 12, 12}));
  std::ofstream(dir / "cfg.json") << R"({"k": 5, "runs_dir": ")" << (dir / "runs").string() << "\"}";
  const std::string split = (dir / "s.tsv").string();
  const std::vector<std::string> base = {"--config", (dir / "cfg.json").string(), "split",
                                         "--manifest", (dir / "m.tsv").string(), "--split", split};

  REQUIRE(Cli(base).code == 0);
  CHECK(Folds(split) == 5);

  REQUIRE(Cli(base, {{"ETHNIPIPE_K", "3"}}).code == 0);
  CHECK(Folds(split) == 3);

  auto with_flag = base;
  with_flag.insert(with_flag.end(), {"--k", "2"});
  const CliResult r = Cli(with_flag, {{"ETHNIPIPE_K", "3"}});
  REQUIRE(r.code == 0);
  CHECK(Folds(split) == 2);
  const auto saved = nlohmann::json::parse(Slurp(r.run_dir / "config" / "run_config.json"));
  CHECK(saved["command"] == "split");
  CHECK(saved["values"]["k"] == "2");
}

TEST_CASE("exit codes") {
  testing::TempDir dir;
  const std::string runs = (dir / "runs").string();
  SUBCASE("parse error and bad values are 2") {
    CHECK(Cli({"split", "--no-such-flag", "1"}).code == 2);
    CHECK(Cli({}).code == 2);
    SaveManifest(dir / "m.tsv", testing::CountsManifest({4, 4, 4, 4}));
    const CliResult r = Cli({"split", "--manifest", (dir / "m.tsv").string(), "--k", "zero",
                             "--runs-dir", runs});
    CHECK(r.code == 2);
    CHECK(r.err.find("error\tbad_config\t") != std::string::npos);
    CHECK(Cli({"train", "--epochs", "0", "--runs-dir", runs}).code == 2);
  }
  SUBCASE("missing inputs are 3") {
    const CliResult r = Cli({"split", "--manifest", (dir / "absent.tsv").string(), "--runs-dir", runs});
    CHECK(r.code == 3);
    CHECK(r.err.find("error\tmissing_input\t") != std::string::npos);
    CHECK(Cli({"predict", (dir / "absent.png").string(), "--checkpoint",
               (dir / "absent.epwa").string(), "--runs-dir", runs})
              .code == 3);
    CHECK(Cli({"replay", (dir / "absent.json").string()}).code == 3);
  }
  SUBCASE("no face under the skip policy is 4") {
    MakeCheckpoint(InitializeModel(BuildModelSpec({{4}}, 8), 1), "tiny").Save(dir / "tiny.epwa");
    WritePng(dir / "blank.png", GrayImage(64, 64, std::vector<std::uint8_t>(64 * 64, 128)));
    const CliResult r = Cli({"predict", (dir / "blank.png").string(), "--checkpoint",
                             (dir / "tiny.epwa").string(), "--runs-dir", runs});
    CHECK(r.code == 4);
    CHECK(r.err.find("error\truntime\t") != std::string::npos);
  }
  SUBCASE("help is 0") { CHECK(Cli({"--help"}).code == 0); }
}

TEST_CASE("predict prints a label and a distribution") {
  testing::TempDir dir;
  MakeCheckpoint(InitializeModel(BuildModelSpec({{4}, {8}}, 16), 3), "tiny").Save(dir / "tiny.epwa");
  const CliResult r = Cli({"predict", (testing::FixtureDir() / "face_rgb_128.png").string(),
                           "--checkpoint", (dir / "tiny.epwa").string(), "--runs-dir",
                           (dir / "runs").string()});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string label;
  std::getline(in, label);
  CHECK(LabelFromName(label).has_value());
  double sum = 0.0, best = -1.0;
  std::string best_name;
  for (int c = 0; c < kNumClasses; ++c) {
    std::string line;
    REQUIRE(std::getline(in, line));
    const auto tab = line.find('\t');
    CHECK(line.substr(0, tab) == LabelName(static_cast<EthnicLabel>(c)));
    const double p = std::stod(line.substr(tab + 1));
    CHECK(p >= 0.0);
    sum += p;
    if (p > best) {
      best = p;
      best_name = line.substr(0, tab);
    }
  }
  CHECK(std::abs(sum - 1.0) < 1e-5);
  CHECK(best_name == label);
}

TEST_CASE("ingest, preprocess and split chain through the CLI") {
  testing::TempDir dir;
  const std::string runs = (dir / "runs").string();
  const std::string images = (dir / "img").string();
  REQUIRE(Cli({"synth", "--out", images, "--per-class", "6", "--runs-dir", runs}).code == 0);
  const CliResult ingest = Cli({"ingest", "--root", images, "--manifest", (dir / "m.tsv").string(),
                                "--runs-dir", runs});
  REQUIRE(ingest.code == 0);
  CHECK(ingest.out.find("records\t24\n") != std::string::npos);
  const CliResult pre = Cli({"preprocess", "--root", images, "--manifest", (dir / "m.tsv").string(),
                             "--cache", (dir / "c.epp").string(), "--policy", "center-crop",
                             "--jobs", "2", "--runs-dir", runs});
  REQUIRE(pre.code == 0);
  CHECK(pre.out == "cached\t24\nskipped\t0\n");
  CHECK(fs::exists(dir / "c.epp"));
  const CliResult split = Cli({"split", "--manifest", (dir / "m.tsv").string(), "--cache",
                               (dir / "c.epp").string(), "--k", "2", "--split",
                               (dir / "s.tsv").string(), "--runs-dir", runs});
  REQUIRE(split.code == 0);
  CHECK(Folds(dir / "s.tsv") == 2);
}

}  // namespace ethnipipe
