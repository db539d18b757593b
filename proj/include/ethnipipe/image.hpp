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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

namespace ethnipipe {

/// 8-bit single-channel raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width, std::uint8_t fill = 0);
  GrayImage(int height, int width, std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int y, int x) const { return data_[index(y, x)]; }
  std::uint8_t& at(int y, int x) { return data_[index(y, x)]; }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

/// 8-bit three-channel raster, interleaved R,G,B, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width, std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }

  const std::uint8_t* pixel(int y, int x) const {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }
  std::uint8_t* pixel(int y, int x) {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  const std::vector<std::uint8_t>& data() const { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Axis-aligned face rectangle in pixel coordinates.
struct FaceBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }
  bool FitsInside(int height, int width) const {
    return w > 0 && h > 0 && x >= 0 && y >= 0 && x + w <= width &&
           y + h <= height;
  }

  friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

using AnyImage = std::variant<RgbImage, GrayImage>;

/// Decodes a PNG or JPEG file. Alpha is dropped; 16-bit input is rejected.
/// Throws MissingInput when the file is absent and RuntimeFailure when it
/// cannot be decoded.
AnyImage DecodeImageFile(const std::filesystem::path& path);

/// As DecodeImageFile, but returns nullopt for anything undecodable.
std::optional<AnyImage> TryDecodeImageFile(const std::filesystem::path& path);

void WritePng(const std::filesystem::path& path, const GrayImage& image);
void WritePng(const std::filesystem::path& path, const RgbImage& image);

}  // namespace ethnipipe
