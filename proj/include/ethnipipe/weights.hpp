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

// Named-tensor weight archive.
//
// File layout (all integers little-endian):
//   "EPWA" | version u16
//   repeated { key_len u16 | key bytes | rank u8 | dims u32 x rank
//              | float32 payload }
//   CRC-32 (zlib polynomial) of every preceding byte, u32

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ethnipipe/tensor.hpp"

namespace ethnipipe {

inline constexpr std::uint16_t kWeightArchiveVersion = 1;

std::uint32_t Crc32(std::span<const std::uint8_t> bytes);

class WeightArchive {
 public:
  /// Inserts or replaces; a replaced key keeps its position.
  void Set(const std::string& key, Tensor<float> tensor);
  bool Contains(const std::string& key) const { return index_.count(key) != 0; }
  const Tensor<float>* Find(const std::string& key) const;
  /// Throws MissingInput naming the key.
  const Tensor<float>& At(const std::string& key) const;
  void Erase(const std::string& key);

  /// Keys in file order.
  const std::vector<std::string>& keys() const { return keys_; }
  std::size_t size() const { return keys_.size(); }

  /// Free-form provenance, stored under the reserved key "meta.source".
  std::string source_tag() const;
  void set_source_tag(const std::string& tag);

  /// CRC of the most recent Serialize()/Parse() image, 0 before either.
  std::uint32_t checksum() const { return checksum_; }

  std::vector<std::uint8_t> Serialize() const;
  /// Verifies magic, version and CRC.
  static WeightArchive Parse(std::span<const std::uint8_t> bytes);

  void Save(const std::filesystem::path& path) const;
  static WeightArchive Load(const std::filesystem::path& path);

  friend bool operator==(const WeightArchive& a, const WeightArchive& b) {
    return a.keys_ == b.keys_ && a.tensors_ == b.tensors_;
  }

 private:
  std::vector<std::string> keys_;
  std::vector<Tensor<float>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
  mutable std::uint32_t checksum_ = 0;
};

}  // namespace ethnipipe
