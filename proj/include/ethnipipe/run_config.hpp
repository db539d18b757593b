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

// Layered command configuration: defaults < JSON config file < ETHNIPIPE_*
// environment variables < command-line flags.

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ethnipipe {

struct Knob {
  std::string key;  // snake_case; flag is --key with '_' -> '-'
  std::string default_value;
  std::string help;
};

/// Every configurable value, in a fixed order.
const std::vector<Knob>& AllKnobs();

std::string KnobFlag(const std::string& key);        // "batch_size" -> "--batch-size"
std::string KnobEnvironment(const std::string& key);  // "batch_size" -> "ETHNIPIPE_BATCH_SIZE"

enum class KnobOrigin { kDefault, kFile, kEnvironment, kFlag };

class RunConfig {
 public:
  /// All knobs at their defaults.
  explicit RunConfig(std::string command = "");

  const std::string& command() const { return command_; }

  /// Object of knob -> string|number|bool. Unknown keys throw BadConfig.
  /// A "command" entry, if present, must match.
  void MergeFile(const nlohmann::json& doc);
  void MergeFile(const std::filesystem::path& path);
  /// Reads ETHNIPIPE_<KEY> through `lookup` (returns nullptr when unset).
  void MergeEnvironment(const std::function<const char*(const char*)>& lookup);
  void Set(const std::string& key, const std::string& value, KnobOrigin origin = KnobOrigin::kFlag);

  const std::string& Get(const std::string& key) const;
  int GetInt(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  std::uint64_t GetU64(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  KnobOrigin Origin(const std::string& key) const;

  /// {"command": ..., "values": {...}}; MergeFile accepts this shape too.
  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& doc);

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
  std::map<std::string, KnobOrigin> origins_;
};

}  // namespace ethnipipe
