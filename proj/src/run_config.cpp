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

#include "ethnipipe/run_config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>

#include "ethnipipe/error.hpp"

namespace ethnipipe {

const std::vector<Knob>& AllKnobs() {
  static const std::vector<Knob> knobs = {
      {"root", "", "dataset root directory"},
      {"labels", "", "subdirectory=Label pairs, comma separated (default: class names)"},
      {"manifest", "manifest.tsv", "manifest file"},
      {"cache", "cache.epp", "preprocessed cache blob"},
      {"split", "split.tsv", "split file"},
      {"weights", "", "pretrained backbone archive (EPWA); empty for random init"},
      {"checkpoint", "", "checkpoint archive(s), comma separated"},
      {"run", "", "existing run directory to read checkpoints from / write reports to"},
      {"out", "", "output path"},
      {"runs_dir", "runs", "parent directory for run outputs"},
      {"tag", "", "run directory suffix (default: command name)"},
      {"epochs", "50", "training epochs"},
      {"lr", "0.001", "SGD learning rate"},
      {"momentum", "0.9", "SGD momentum"},
      {"batch_size", "32", "mini-batch size"},
      {"sigma", "5", "balancing noise std-dev in gray levels"},
      {"seed", "7", "random seed"},
      {"k", "10", "number of folds"},
      {"ratios", "0.75,0.10,0.15", "train,val,test fractions"},
      {"policy", "skip", "no-face policy: skip or center-crop"},
      {"jobs", "1", "preprocessing workers"},
      {"format", "table", "output format: table or structured"},
      {"backbone", "vgg16", "backbone blocks: vgg16 or widths like 8,8/16"},
      {"head_width", "500", "hidden units in the dense head"},
      {"detector", "", "cascade XML, or 'none' (default: bundled LBP cascade)"},
      {"nlm_h", "3", "non-local means filter strength"},
      {"nlm_template", "7", "non-local means template window"},
      {"nlm_search", "21", "non-local means search window"},
      {"nlm_sigma", "0", "non-local means noise sigma"},
      {"fold", "-1", "single fold to run (-1 = all)"},
      {"reps", "20", "benchmark repetitions"},
      {"warmup", "3", "benchmark warmup repetitions"},
      {"limit", "16", "benchmark image count"},
      {"balance", "true", "balance training classes with noisy duplicates"},
      {"freeze", "", "layers to keep fixed, comma separated"},
      {"grid", "", "grid search, e.g. 'lr=0.01,0.001;epochs=5'"},
      {"per_class", "100", "synthetic images per class"},
      {"image", "", "input image"},
      {"input", "", "input file"},
  };
  return knobs;
}

std::string KnobFlag(const std::string& key) {
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

std::string KnobEnvironment(const std::string& key) {
  std::string env = "ETHNIPIPE_" + key;
  std::transform(env.begin(), env.end(), env.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return env;
}

RunConfig::RunConfig(std::string command) : command_(std::move(command)) {
  for (const Knob& k : AllKnobs()) {
    values_[k.key] = k.default_value;
    origins_[k.key] = KnobOrigin::kDefault;
  }
}

void RunConfig::Set(const std::string& key, const std::string& value, KnobOrigin origin) {
  auto it = values_.find(key);
  if (it == values_.end()) throw BadConfig("unknown configuration key '" + key + "'");
  it->second = value;
  origins_[key] = origin;
}

void RunConfig::MergeFile(const nlohmann::json& doc) {
  if (!doc.is_object()) throw BadConfig("config file must hold a JSON object");
  const nlohmann::json* values = &doc;
  if (doc.contains("values")) {
    if (doc.contains("command") && !command_.empty() && doc["command"] != command_) {
      throw BadConfig("config file is for command '" + doc["command"].get<std::string>() +
                      "', not '" + command_ + "'");
    }
    values = &doc["values"];
    if (!values->is_object()) throw BadConfig("config 'values' must be an object");
  }
  for (const auto& [key, value] : values->items()) {
    if (values == &doc && key == "command") continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_number() || value.is_boolean()) {
      text = value.dump();
    } else {
      throw BadConfig("config key '" + key + "' must be a string, number or boolean");
    }
    Set(key, text, KnobOrigin::kFile);
  }
}

void RunConfig::MergeFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("config file not found: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw BadConfig("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  MergeFile(doc);
}

void RunConfig::MergeEnvironment(const std::function<const char*(const char*)>& lookup) {
  for (const Knob& k : AllKnobs()) {
    if (const char* v = lookup(KnobEnvironment(k.key).c_str())) {
      Set(k.key, v, KnobOrigin::kEnvironment);
    }
  }
}

const std::string& RunConfig::Get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw BadConfig("unknown configuration key '" + key + "'");
  return it->second;
}

namespace {

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw BadConfig(KnobFlag(key) + ": invalid value '" + text + "'");
  }
  return v;
}

}  // namespace

int RunConfig::GetInt(const std::string& key) const { return ParseNumber<int>(key, Get(key)); }

double RunConfig::GetDouble(const std::string& key) const {
  return ParseNumber<double>(key, Get(key));
}

std::uint64_t RunConfig::GetU64(const std::string& key) const {
  return ParseNumber<std::uint64_t>(key, Get(key));
}

bool RunConfig::GetBool(const std::string& key) const {
  const std::string& v = Get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw BadConfig(KnobFlag(key) + ": expected a boolean, got '" + v + "'");
}

KnobOrigin RunConfig::Origin(const std::string& key) const {
  auto it = origins_.find(key);
  if (it == origins_.end()) throw BadConfig("unknown configuration key '" + key + "'");
  return it->second;
}

namespace {

constexpr std::array<std::pair<KnobOrigin, std::string_view>, 4> kOriginNames = {{
    {KnobOrigin::kDefault, "default"},
    {KnobOrigin::kFile, "file"},
    {KnobOrigin::kEnvironment, "environment"},
    {KnobOrigin::kFlag, "flag"},
}};

std::string OriginName(KnobOrigin origin) {
  for (const auto& [o, name] : kOriginNames) {
    if (o == origin) return std::string(name);
  }
  return "default";
}

KnobOrigin ParseOrigin(const std::string& text) {
  for (const auto& [o, name] : kOriginNames) {
    if (name == text) return o;
  }
  throw BadConfig("unknown knob origin '" + text + "'");
}

}  // namespace

nlohmann::json RunConfig::ToJson() const {
  nlohmann::ordered_json values;
  for (const Knob& k : AllKnobs()) values[k.key] = values_.at(k.key);
  nlohmann::ordered_json origins = nlohmann::ordered_json::object();
  for (const Knob& k : AllKnobs()) {
    const KnobOrigin o = origins_.at(k.key);
    if (o != KnobOrigin::kDefault) origins[k.key] = OriginName(o);
  }
  nlohmann::ordered_json doc;
  doc["command"] = command_;
  doc["values"] = values;
  doc["origins"] = origins;
  return nlohmann::json::parse(doc.dump());
}

RunConfig RunConfig::FromJson(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("command") || !doc["command"].is_string()) {
    throw BadConfig("run config lacks a 'command' string");
  }
  RunConfig cfg(doc["command"].get<std::string>());
  cfg.MergeFile(doc);
  if (doc.contains("origins")) {
    // Restore where each value came from so replay behaves like the original
    // invocation; unlisted knobs were defaults.
    for (const Knob& k : AllKnobs()) cfg.origins_[k.key] = KnobOrigin::kDefault;
    for (const auto& [key, name] : doc["origins"].items()) {
      if (!cfg.values_.count(key) || !name.is_string()) {
        throw BadConfig("run config has a bad origin entry for '" + key + "'");
      }
      cfg.origins_[key] = ParseOrigin(name.get<std::string>());
    }
  }
  return cfg;
}

}  // namespace ethnipipe
