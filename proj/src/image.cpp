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

#include "ethnipipe/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ethnipipe/error.hpp"

namespace ethnipipe {

namespace {

void CheckDims(int height, int width) {
  if (height < 1 || width < 1) {
    throw BadConfig("image dimensions must be positive, got " +
                    std::to_string(height) + "x" + std::to_string(width));
  }
}

}  // namespace

GrayImage::GrayImage(int height, int width, std::uint8_t fill)
    : height_(height), width_(width) {
  CheckDims(height, width);
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

GrayImage::GrayImage(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  CheckDims(height, width);
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    throw BadConfig("gray image buffer has " + std::to_string(data_.size()) +
                    " bytes, expected " +
                    std::to_string(static_cast<std::size_t>(height) * width));
  }
}

RgbImage::RgbImage(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  CheckDims(height, width);
  if (data_.size() != static_cast<std::size_t>(height) * width * 3) {
    throw BadConfig("rgb image buffer has " + std::to_string(data_.size()) +
                    " bytes, expected " +
                    std::to_string(static_cast<std::size_t>(height) * width * 3));
  }
}

std::optional<AnyImage> TryDecodeImageFile(const std::filesystem::path& path) {
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception&) {
    return std::nullopt;
  }
  if (mat.empty() || mat.depth() != CV_8U) return std::nullopt;

  const int h = mat.rows;
  const int w = mat.cols;
  if (mat.channels() == 1) {
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
      const auto* row = mat.ptr<std::uint8_t>(y);
      std::copy(row, row + w, buf.begin() + static_cast<std::ptrdiff_t>(y) * w);
    }
    return GrayImage(h, w, std::move(buf));
  }

  cv::Mat rgb;
  if (mat.channels() == 3) {
    cv::cvtColor(mat, rgb, cv::COLOR_BGR2RGB);
  } else if (mat.channels() == 4) {
    cv::cvtColor(mat, rgb, cv::COLOR_BGRA2RGB);
  } else {
    return std::nullopt;
  }
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    const auto* row = rgb.ptr<std::uint8_t>(y);
    std::copy(row, row + 3 * w,
              buf.begin() + static_cast<std::ptrdiff_t>(y) * w * 3);
  }
  return RgbImage(h, w, std::move(buf));
}

AnyImage DecodeImageFile(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingInput("image file not found: " + path.string());
  }
  auto decoded = TryDecodeImageFile(path);
  if (!decoded) throw RuntimeFailure("cannot decode image: " + path.string());
  return std::move(*decoded);
}

void WritePng(const std::filesystem::path& path, const GrayImage& image) {
  cv::Mat mat(image.height(), image.width(), CV_8UC1,
              const_cast<std::uint8_t*>(image.data().data()));
  if (!cv::imwrite(path.string(), mat)) {
    throw RuntimeFailure("cannot write " + path.string());
  }
}

void WritePng(const std::filesystem::path& path, const RgbImage& image) {
  cv::Mat rgb(image.height(), image.width(), CV_8UC3,
              const_cast<std::uint8_t*>(image.data().data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) {
    throw RuntimeFailure("cannot write " + path.string());
  }
}

}  // namespace ethnipipe
