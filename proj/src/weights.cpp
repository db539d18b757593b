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

#include "ethnipipe/weights.hpp"

#include <zlib.h>

#include <fstream>

#include "ethnipipe/binary_io.hpp"
#include "ethnipipe/error.hpp"

namespace ethnipipe {

namespace {
constexpr char kMagic[4] = {'E', 'P', 'W', 'A'};
constexpr const char* kSourceKey = "meta.source";
}  // namespace

std::string ShapeString(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void WeightArchive::Set(const std::string& key, Tensor<float> tensor) {
  if (key.empty() || key.size() > 0xffff) throw BadConfig("invalid archive key length");
  if (tensor.shape.size() > 0xff) throw BadConfig("tensor rank too large for '" + key + "'");
  if (ShapeSize(tensor.shape) != tensor.data.size()) {
    throw BadConfig("tensor '" + key + "' data does not match shape " +
                    ShapeString(tensor.shape));
  }
  auto it = index_.find(key);
  if (it != index_.end()) {
    tensors_[it->second] = std::move(tensor);
    return;
  }
  index_.emplace(key, keys_.size());
  keys_.push_back(key);
  tensors_.push_back(std::move(tensor));
}

const Tensor<float>* WeightArchive::Find(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &tensors_[it->second];
}

const Tensor<float>& WeightArchive::At(const std::string& key) const {
  const Tensor<float>* t = Find(key);
  if (t == nullptr) throw MissingInput("weight archive lacks key '" + key + "'");
  return *t;
}

void WeightArchive::Erase(const std::string& key) {
  auto it = index_.find(key);
  if (it == index_.end()) return;
  const std::size_t pos = it->second;
  keys_.erase(keys_.begin() + static_cast<std::ptrdiff_t>(pos));
  tensors_.erase(tensors_.begin() + static_cast<std::ptrdiff_t>(pos));
  index_.clear();
  for (std::size_t i = 0; i < keys_.size(); ++i) index_.emplace(keys_[i], i);
}

std::string WeightArchive::source_tag() const {
  const Tensor<float>* t = Find(kSourceKey);
  if (t == nullptr) return {};
  std::string tag;
  for (float c : t->data) tag.push_back(static_cast<char>(static_cast<int>(c)));
  return tag;
}

void WeightArchive::set_source_tag(const std::string& tag) {
  Tensor<float> t({static_cast<std::uint32_t>(tag.size())});
  for (std::size_t i = 0; i < tag.size(); ++i) {
    t.data[i] = static_cast<float>(static_cast<unsigned char>(tag[i]));
  }
  Set(kSourceKey, std::move(t));
}

std::vector<std::uint8_t> WeightArchive::Serialize() const {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  binary::AppendLe<std::uint16_t>(out, kWeightArchiveVersion);
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const std::string& key = keys_[i];
    const Tensor<float>& t = tensors_[i];
    binary::AppendLe<std::uint16_t>(out, static_cast<std::uint16_t>(key.size()));
    out.insert(out.end(), key.begin(), key.end());
    out.push_back(static_cast<std::uint8_t>(t.shape.size()));
    for (std::uint32_t d : t.shape) binary::AppendLe<std::uint32_t>(out, d);
    for (float v : t.data) binary::AppendF32(out, v);
  }
  checksum_ = Crc32(out);
  binary::AppendLe<std::uint32_t>(out, checksum_);
  return out;
}

WeightArchive WeightArchive::Parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 2 + 4) throw RuntimeFailure("weight archive: file too short");
  const std::size_t body = bytes.size() - 4;
  binary::Reader crc_reader(bytes.data() + body, 4, "weight archive");
  const auto stored = crc_reader.ReadLe<std::uint32_t>();
  const auto actual = Crc32(bytes.first(body));
  if (stored != actual) throw RuntimeFailure("weight archive: CRC mismatch");

  binary::Reader reader(bytes.data(), body, "weight archive");
  if (reader.ReadString(4) != std::string(kMagic, 4)) {
    throw RuntimeFailure("weight archive: bad magic");
  }
  const auto version = reader.ReadLe<std::uint16_t>();
  if (version != kWeightArchiveVersion) {
    throw RuntimeFailure("weight archive: unsupported version " + std::to_string(version));
  }
  WeightArchive archive;
  while (reader.remaining() > 0) {
    const auto key_len = reader.ReadLe<std::uint16_t>();
    std::string key = reader.ReadString(key_len);
    const auto rank = reader.ReadLe<std::uint8_t>();
    Shape shape(rank);
    for (auto& d : shape) d = reader.ReadLe<std::uint32_t>();
    const std::size_t n = ShapeSize(shape);
    if (n > reader.remaining() / 4) {
      throw RuntimeFailure("weight archive: tensor '" + key + "' overruns file");
    }
    std::vector<float> data(n);
    for (float& v : data) v = reader.ReadF32();
    if (archive.Contains(key)) throw RuntimeFailure("weight archive: duplicate key '" + key + "'");
    archive.Set(key, Tensor<float>(std::move(shape), std::move(data)));
  }
  archive.checksum_ = stored;
  return archive;
}

void WeightArchive::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write weight archive " + path.string());
  binary::WriteAll(out, Serialize());
  if (!out) throw RuntimeFailure("failed writing weight archive " + path.string());
}

WeightArchive WeightArchive::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("weight archive not found: " + path.string());
  const auto bytes = binary::ReadAll(in);
  return Parse(bytes);
}

}  // namespace ethnipipe
