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

// Preprocessed-image cache.
//
// The blob file is a concatenation of per-image records:
//   "EPP1" | height u16 | width u16 | channels u16 | 6 reserved bytes
//   | height*width*channels float32 samples, little-endian
// A sidecar text index "<blob>.idx" maps sample id -> byte offset.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ethnipipe/preprocess.hpp"

namespace ethnipipe {

inline constexpr std::size_t kCacheHeaderBytes = 16;

std::vector<std::uint8_t> EncodeCacheBlob(const NetInput& input);

/// Decodes one record starting at `offset`. Throws on bad magic or shape.
NetInput DecodeCacheBlob(const std::vector<std::uint8_t>& bytes,
                         std::size_t offset);

std::filesystem::path CacheIndexPath(const std::filesystem::path& blob);

class PreprocessedCache {
 public:
  void Put(const std::string& id, NetInput input);
  bool Contains(const std::string& id) const { return entries_.count(id) != 0; }
  /// Throws MissingInput naming the id.
  const NetInput& At(const std::string& id) const;
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> Ids() const;

  /// Writes the blob file and its index. Records are laid out in id order.
  void Save(const std::filesystem::path& blob) const;
  static PreprocessedCache Load(const std::filesystem::path& blob);

 private:
  std::map<std::string, NetInput> entries_;
};

}  // namespace ethnipipe
