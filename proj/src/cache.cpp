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

#include "ethnipipe/cache.hpp"

#include <fstream>
#include <sstream>

#include "ethnipipe/binary_io.hpp"
#include "ethnipipe/error.hpp"

namespace ethnipipe {

namespace {
constexpr char kMagic[4] = {'E', 'P', 'P', '1'};
constexpr const char* kIndexHeader = "#ethnipipe-cache-index v1";
}  // namespace

std::vector<std::uint8_t> EncodeCacheBlob(const NetInput& input) {
  std::vector<std::uint8_t> out;
  out.reserve(kCacheHeaderBytes + kNetInputSize * 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  binary::AppendLe<std::uint16_t>(out, kNetSide);
  binary::AppendLe<std::uint16_t>(out, kNetSide);
  binary::AppendLe<std::uint16_t>(out, kNetChannels);
  out.insert(out.end(), 6, 0);
  for (float v : input.values) binary::AppendF32(out, v);
  return out;
}

NetInput DecodeCacheBlob(const std::vector<std::uint8_t>& bytes,
                         std::size_t offset) {
  if (offset > bytes.size()) throw RuntimeFailure("cache offset past end of blob");
  binary::Reader reader(bytes.data() + offset, bytes.size() - offset, "cache blob");
  if (reader.ReadString(4) != std::string(kMagic, 4)) {
    throw RuntimeFailure("cache blob: bad magic at offset " + std::to_string(offset));
  }
  const auto h = reader.ReadLe<std::uint16_t>();
  const auto w = reader.ReadLe<std::uint16_t>();
  const auto c = reader.ReadLe<std::uint16_t>();
  if (h != kNetSide || w != kNetSide || c != kNetChannels) {
    throw RuntimeFailure("cache blob: unexpected shape " + std::to_string(h) + "x" +
                         std::to_string(w) + "x" + std::to_string(c));
  }
  reader.Skip(6);
  NetInput out;
  for (float& v : out.values) v = reader.ReadF32();
  return out;
}

std::filesystem::path CacheIndexPath(const std::filesystem::path& blob) {
  return std::filesystem::path(blob.string() + ".idx");
}

void PreprocessedCache::Put(const std::string& id, NetInput input) {
  entries_[id] = std::move(input);
}

const NetInput& PreprocessedCache::At(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw MissingInput("cache miss for id '" + id + "'");
  return it->second;
}

std::vector<std::string> PreprocessedCache::Ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, _] : entries_) ids.push_back(id);
  return ids;
}

void PreprocessedCache::Save(const std::filesystem::path& blob) const {
  std::ofstream data(blob, std::ios::binary);
  std::ofstream index(CacheIndexPath(blob));
  if (!data || !index) throw RuntimeFailure("cannot write cache " + blob.string());
  index << kIndexHeader << '\n';
  std::uint64_t offset = 0;
  for (const auto& [id, input] : entries_) {
    const auto bytes = EncodeCacheBlob(input);
    binary::WriteAll(data, bytes);
    index << id << '\t' << offset << '\n';
    offset += bytes.size();
  }
  if (!data || !index) throw RuntimeFailure("failed writing cache " + blob.string());
}

PreprocessedCache PreprocessedCache::Load(const std::filesystem::path& blob) {
  const auto index_path = CacheIndexPath(blob);
  if (!std::filesystem::exists(blob)) throw MissingInput("cache not found: " + blob.string());
  if (!std::filesystem::exists(index_path)) {
    throw MissingInput("cache index not found: " + index_path.string());
  }
  std::ifstream data(blob, std::ios::binary);
  const auto bytes = binary::ReadAll(data);

  std::ifstream index(index_path);
  std::string line;
  if (!std::getline(index, line) || line != kIndexHeader) {
    throw RuntimeFailure("cache index: missing header in " + index_path.string());
  }
  PreprocessedCache cache;
  while (std::getline(index, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw RuntimeFailure("cache index: malformed line '" + line + "'");
    const std::string id = line.substr(0, tab);
    const std::size_t offset = std::stoull(line.substr(tab + 1));
    cache.Put(id, DecodeCacheBlob(bytes, offset));
  }
  return cache;
}

}  // namespace ethnipipe
