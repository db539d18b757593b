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

// Library-level chain: files on disk to a rendered report, with every
// intermediate artifact written and read back.

#include <doctest.h>

#include "ethnipipe/cache.hpp"
#include "ethnipipe/dataset.hpp"
#include "ethnipipe/evaluation.hpp"
#include "ethnipipe/model.hpp"
#include "ethnipipe/preprocess.hpp"
#include "ethnipipe/synthetic.hpp"
#include "ethnipipe/training.hpp"
#include "test_support.hpp"

namespace ethnipipe {

TEST_CASE("synthetic images to cross-validation report") {
  testing::TempDir dir;
  SyntheticOptions synth;
  synth.per_class = 16;
  synth.seed = 4;
  REQUIRE(WriteSyntheticDataset(dir / "img", synth) == 64);

  const IngestResult ingest = IngestDirectory(dir / "img", DefaultLabelMap());
  REQUIRE(ingest.manifest.Counts() == ClassCounts{16, 16, 16, 16});
  SaveManifest(dir / "m.tsv", ingest.manifest);
  const Manifest manifest = LoadManifest(dir / "m.tsv");
  CHECK(manifest.records() == ingest.manifest.records());

  const auto detector = CascadeFaceDetector::Load(testing::CascadePath());
  PipelineOptions opt;
  opt.policy = NoFacePolicy::kCenterCrop;
  PreprocessedCache cache;
  for (const auto& r : manifest.records()) {
    const PipelineResult out = PreprocessImage(DecodeImageFile(dir / "img" / r.path), *detector, opt);
    REQUIRE(std::holds_alternative<NetInput>(out));
    cache.Put(r.id, std::get<NetInput>(out));
  }
  cache.Save(dir / "c.epp");
  const PreprocessedCache loaded = PreprocessedCache::Load(dir / "c.epp");
  CHECK(loaded.Ids() == cache.Ids());

  const auto plans = KFoldSplit(manifest, 2, {0.75, 0.10, 0.15}, 8);
  SaveSplitPlans(dir / "s.tsv", plans);
  REQUIRE(LoadSplitPlans(dir / "s.tsv") == plans);

  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 8;
  cfg.seed = 2;
  const ModelSpec spec = BuildModelSpec({{8}, {16}}, 32);
  std::vector<FoldReport> folds;
  for (const SplitPlan& plan : plans) {
    const TrainResult r = Train(InitializeModel(spec, 1), plan, manifest, loaded, cfg);
    CHECK(r.log.epochs.size() == 4);
    MakeCheckpoint(r.best_state, "fold").Save(dir / "best.epwa");
    const ModelState<float> back = LoadCheckpoint(WeightArchive::Load(dir / "best.epwa"));
    CHECK(back == r.best_state);
    folds.push_back(Evaluate(back, plan.test_ids, manifest, loaded, plan.fold_index));
  }
  const CrossValReport report = Aggregate(folds);
  CHECK(report.aggregate.confusion.Total() == plans[0].test_ids.size() + plans[1].test_ids.size());
  CHECK(report.aggregate.total_accuracy > 0.25);  // better than chance on separable classes
  CHECK(ParseStructuredReport(RenderReport(report, ReportFormat::kStructured)) == report);
  const std::string table = RenderReport(report, ReportFormat::kTable);
  CHECK(table.find("All | ") != std::string::npos);
}

}  // namespace ethnipipe
