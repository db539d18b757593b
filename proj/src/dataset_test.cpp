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

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "ethnipipe/error.hpp"
#include "test_support.hpp"

namespace ethnipipe {
namespace {

void WriteGrayPng(const std::filesystem::path& path, std::uint8_t v) {
  std::filesystem::create_directories(path.parent_path());
  WritePng(path, GrayImage(6, 5, v));
}

std::string KindMessage(const std::function<void()>& f, ErrorKind* kind) {
  try {
    f();
  } catch (const Error& e) {
    if (kind) *kind = e.kind();
    return e.what();
  }
  return "";
}

std::set<std::string> AsSet(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

void CheckPlanInvariants(const Manifest& m, const std::vector<SplitPlan>& plans,
                         const SplitRatios& ratios) {
  const ClassCounts total = m.Counts();
  for (const SplitPlan& p : plans) {
    std::set<std::string> all;
    for (Subset s : {Subset::kTrain, Subset::kVal, Subset::kTest}) {
      const auto& ids = p.ids(s);
      CHECK(std::is_sorted(ids.begin(), ids.end()));
      for (const auto& id : ids) CHECK(all.insert(id).second);  // disjoint
    }
    CHECK(all.size() == m.size());  // covering
    const double r[3] = {ratios.train, ratios.val, ratios.test};
    int si = 0;
    for (Subset s : {Subset::kTrain, Subset::kVal, Subset::kTest}) {
      const auto& ids = p.ids(s);
      const ClassCounts c = m.Counts(ids);
      for (int k = 0; k < kNumClasses; ++k) {
        CHECK(std::abs(static_cast<double>(c[k]) - total[k] * r[si]) <= 1.0 + 1e-9);
        if (!ids.empty()) {
          const double share = static_cast<double>(c[k]) / ids.size();
          const double overall = static_cast<double>(total[k]) / m.size();
          CHECK(std::abs(share - overall) <= 1.0 / ids.size() + 1e-12);
        }
      }
      ++si;
    }
  }
}

}  // namespace

TEST_CASE("ingest") {
  testing::TempDir tmp;
  SUBCASE("two classes") {
    WriteGrayPng(tmp / "African/a1.png", 10);
    WriteGrayPng(tmp / "African/a2.png", 20);
    WriteGrayPng(tmp / "Asian/b1.png", 30);
    const IngestResult r = IngestDirectory(tmp.path(), DefaultLabelMap());
    CHECK(r.manifest.size() == 3);
    CHECK(r.manifest.Counts() == ClassCounts{2, 1, 0, 0});
    CHECK(r.skipped.empty());
    CHECK(r.manifest.records()[0].path == "African/a1.png");
    CHECK(r.manifest.records()[2].label == EthnicLabel::kAsian);
  }
  SUBCASE("text file skipped") {
    WriteGrayPng(tmp / "Indian/x.png", 1);
    std::ofstream(tmp / "Indian/notes.txt") << "hello";
    const IngestResult r = IngestDirectory(tmp.path(), DefaultLabelMap());
    CHECK(r.manifest.size() == 1);
    CHECK(r.skipped.size() == 1);
  }
  SUBCASE("nested sources") {
    WriteGrayPng(tmp / "caucasian/db1/p.png", 1);
    WriteGrayPng(tmp / "caucasian/db2/q.png", 2);
    const IngestResult r = IngestDirectory(tmp.path(), DefaultLabelMap());
    CHECK(r.manifest.records()[0].source == "db1");
    CHECK(r.manifest.records()[1].source == "db2");
  }
  SUBCASE("empty root") {
    ErrorKind kind{};
    const std::string msg =
        KindMessage([&] { (void)IngestDirectory(tmp.path(), DefaultLabelMap()); }, &kind);
    CHECK(msg.find("no images found") != std::string::npos);
  }
  SUBCASE("unmapped subdirectory") {
    WriteGrayPng(tmp / "Martian/m.png", 1);
    const std::string msg =
        KindMessage([&] { (void)IngestDirectory(tmp.path(), DefaultLabelMap()); }, nullptr);
    CHECK(msg.find("Martian") != std::string::npos);
  }
  SUBCASE("custom label map") {
    WriteGrayPng(tmp / "afr/1.png", 1);
    const IngestResult r = IngestDirectory(tmp.path(), ParseLabelMap("afr=African"));
    CHECK(r.manifest.records()[0].label == EthnicLabel::kAfrican);
    CHECK_THROWS_AS(ParseLabelMap("afr=Martian"), Error);
  }
  SUBCASE("deterministic") {
    for (int i = 0; i < 5; ++i) WriteGrayPng(tmp / "Asian" / (std::to_string(i) + ".png"), 3);
    CHECK(IngestDirectory(tmp.path(), DefaultLabelMap()).manifest ==
          IngestDirectory(tmp.path(), DefaultLabelMap()).manifest);
  }
}

TEST_CASE("manifest file format") {
  SampleRecord a{"x/1.png", "x/1.png", EthnicLabel::kIndian, "db", std::nullopt, std::nullopt};
  SampleRecord b{"x/1.png~aug0", "x/1.png", EthnicLabel::kIndian, "db", "x/1.png", 42};
  const Manifest m({a, b});
  std::ostringstream out;
  WriteManifest(out, m);
  CHECK(out.str() ==
        "#ethnipipe-manifest v1\n"
        "x/1.png\tx/1.png\t3\tdb\t-\t-\n"
        "x/1.png~aug0\tx/1.png\t3\tdb\tx/1.png\t42\n");
  std::istringstream in(out.str());
  CHECK(ReadManifest(in) == m);

  std::istringstream bad("#something else\n");
  CHECK_THROWS_AS(ReadManifest(bad), Error);
  CHECK_THROWS_AS(Manifest({a, a}), Error);
  SampleRecord orphan = b;
  orphan.augmented_from = "nope";
  CHECK_THROWS_AS(Manifest({a, orphan}), Error);
  SampleRecord chained = b;
  chained.id = "x/1.png~aug1";
  chained.augmented_from = b.id;
  CHECK_THROWS_AS(Manifest({a, b, chained}), Error);
}

TEST_CASE("k-fold split examples") {
  const SplitRatios default_ratios{0.75, 0.10, 0.15};
  SUBCASE("100 samples, k=10") {
    const Manifest m = testing::CountsManifest({25, 25, 25, 25});
    const auto plans = KFoldSplit(m, 10, default_ratios, 7);
    REQUIRE(plans.size() == 10);
    for (const auto& p : plans) {
      CHECK(p.train_ids.size() == 75);
      CHECK(p.val_ids.size() == 10);
      CHECK(p.test_ids.size() == 15);
    }
    CheckPlanInvariants(m, plans, default_ratios);
    CHECK(plans[0].test_ids != plans[1].test_ids);
  }
  SUBCASE("everything in train") {
    const Manifest m = testing::CountsManifest({5, 3, 4, 2});
    for (const auto& p : KFoldSplit(m, 2, {1.0, 0.0, 0.0}, 1)) {
      CHECK(p.train_ids.size() == 14);
      CHECK(p.val_ids.empty());
      CHECK(p.test_ids.empty());
    }
  }
  SUBCASE("byte-identical on repeat") {
    const Manifest m = testing::CountsManifest({13, 9, 30, 11});
    std::ostringstream a, b;
    WriteSplitPlans(a, KFoldSplit(m, 4, default_ratios, 99));
    WriteSplitPlans(b, KFoldSplit(m, 4, default_ratios, 99));
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    CHECK(ReadSplitPlans(in) == KFoldSplit(m, 4, default_ratios, 99));
    CHECK(a.str().rfind("#ethnipipe-split v1\n", 0) == 0);
  }
  SUBCASE("class smaller than k") {
    const Manifest m = testing::CountsManifest({20, 20, 3, 20});
    const std::string msg = KindMessage([&] { (void)KFoldSplit(m, 4, default_ratios, 1); }, nullptr);
    CHECK(msg.find("Caucasian") != std::string::npos);
  }
  SUBCASE("bad parameters") {
    const Manifest m = testing::CountsManifest({20, 20, 20, 20});
    CHECK_THROWS_AS(KFoldSplit(m, 1, default_ratios, 1), Error);
    CHECK_THROWS_AS(KFoldSplit(m, 2, {0.5, 0.2, 0.2}, 1), Error);
    CHECK_THROWS_AS(ParseSplitRatios("0.5,0.5"), Error);
    CHECK(ParseSplitRatios("0.75,0.10,0.15") == default_ratios);
  }
}

TEST_CASE("split properties over random manifests") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> count(3, 60);
  std::uniform_int_distribution<int> pick(0, 3);
  const SplitRatios options[] = {{0.75, 0.10, 0.15}, {0.6, 0.2, 0.2}, {0.5, 0.25, 0.25},
                                 {0.8, 0.0, 0.2}};
  for (int trial = 0; trial < 40; ++trial) {
    const Manifest m = testing::CountsManifest({count(rng), count(rng), count(rng), count(rng)});
    const SplitRatios r = options[pick(rng)];
    const auto plans = KFoldSplit(m, 3, r, rng());
    CheckPlanInvariants(m, plans, r);
  }
}

TEST_CASE("balancing") {
  SUBCASE("tops up the minority class") {
    const Manifest m = testing::CountsManifest({10, 7, 10, 10});
    std::vector<std::string> train;
    for (const auto& r : m.records()) train.push_back(r.id);
    const BalanceResult b = BalanceClasses(m, train, 5.0, 3);
    CHECK(b.added.size() == 3);
    for (const auto& r : b.added) {
      CHECK(r.label == EthnicLabel::kAsian);
      CHECK(r.augmented());
      CHECK(m.At(*r.augmented_from).label == EthnicLabel::kAsian);
    }
    const Manifest grown = m.WithAdded(b.added);
    CHECK(grown.Counts(b.train_ids) == ClassCounts{10, 10, 10, 10});
    SUBCASE("second application adds nothing") {
      CHECK(BalanceClasses(grown, b.train_ids, 5.0, 3).added.empty());
    }
  }
  SUBCASE("already balanced") {
    const Manifest m = testing::CountsManifest({4, 4, 4, 4});
    std::vector<std::string> train;
    for (const auto& r : m.records()) train.push_back(r.id);
    CHECK(BalanceClasses(m, train, 5.0, 1).added.empty());
  }
  SUBCASE("errors") {
    const Manifest m = testing::CountsManifest({4, 0, 4, 4});
    std::vector<std::string> train;
    for (const auto& r : m.records()) train.push_back(r.id);
    CHECK_THROWS_AS(BalanceClasses(m, train, 5.0, 1), Error);
    const Manifest ok = testing::CountsManifest({4, 2, 4, 4});
    train.clear();
    for (const auto& r : ok.records()) train.push_back(r.id);
    CHECK_THROWS_AS(BalanceClasses(ok, train, 0.0, 1), Error);
  }
  SUBCASE("augmented pixels regenerate bit-identically") {
    std::mt19937_64 rng(8);
    const GrayImage parent = testing::RandomGray(80, 80, rng);
    const GrayImage a = AugmentPixels(parent, 5.0, 1234);
    CHECK(a == AugmentPixels(parent, 5.0, 1234));
    CHECK(a != AugmentPixels(parent, 5.0, 1235));
    CHECK(a != parent);
    const NetInput in = AugmentNetInput(Triplicate(parent), 5.0, 1234);
    CHECK(in == Triplicate(a));
  }
  SUBCASE("noise clamps to the byte range") {
    const GrayImage white(10, 10, 255);
    const GrayImage black(10, 10, 0);
    const GrayImage w = AugmentPixels(white, 50.0, 1);
    const GrayImage b = AugmentPixels(black, 50.0, 1);
    CHECK(*std::min_element(w.data().begin(), w.data().end()) < 255);
    CHECK(*std::max_element(b.data().begin(), b.data().end()) > 0);
  }
}

TEST_CASE("augmented records never reach validation or test") {
  const Manifest m = testing::CountsManifest({12, 6, 12, 9});
  for (const SplitPlan& p : KFoldSplit(m, 3, {0.75, 0.10, 0.15}, 5)) {
    const BalanceResult b = BalanceClasses(m, p.train_ids, 5.0, 77);
    const auto val = AsSet(p.val_ids), test = AsSet(p.test_ids);
    for (const auto& r : b.added) {
      CHECK_FALSE(val.count(*r.augmented_from));
      CHECK_FALSE(test.count(*r.augmented_from));
      CHECK_FALSE(val.count(r.id));
      CHECK_FALSE(test.count(r.id));
    }
  }
  // A split drawn from an already-augmented manifest is refused.
  const auto plans = KFoldSplit(m, 3, {0.75, 0.10, 0.15}, 5);
  const BalanceResult b = BalanceClasses(m, plans[0].train_ids, 5.0, 77);
  CHECK_THROWS_AS(KFoldSplit(m.WithAdded(b.added), 3, {0.75, 0.10, 0.15}, 5), Error);
}

}  // namespace ethnipipe
