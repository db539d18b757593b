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

// Face normalization chain: grayscale -> detect -> crop -> 80x80 -> NLM
// denoise -> three identical channels in [0, 1].

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ethnipipe/image.hpp"

namespace ethnipipe {

inline constexpr int kNetSide = 80;
inline constexpr int kNetChannels = 3;
inline constexpr std::size_t kNetInputSize =
    static_cast<std::size_t>(kNetSide) * kNetSide * kNetChannels;

/// 80x80x3 network input, height-width-channel order, unit-scaled.
struct NetInput {
  std::vector<float> values = std::vector<float>(kNetInputSize, 0.0f);

  float at(int y, int x, int c) const {
    return values[(static_cast<std::size_t>(y) * kNetSide + x) * kNetChannels + c];
  }

  friend bool operator==(const NetInput&, const NetInput&) = default;
};

/// BT.601 luma, rounded to nearest.
GrayImage ToGrayscale(const RgbImage& image);

/// Exact sub-raster. Throws BadConfig if the box is not inside the image.
GrayImage Crop(const GrayImage& image, const FaceBox& box);

/// Bilinear resampling with half-pixel-centred sample positions.
GrayImage ResizeBilinear(const GrayImage& image, int out_height, int out_width);

inline GrayImage Resize80(const GrayImage& image) {
  return ResizeBilinear(image, kNetSide, kNetSide);
}

struct NlmParams {
  float h = 3.0f;            // filter strength
  int template_window = 7;   // odd, patch side
  int search_window = 21;    // odd, > template_window
  float sigma = 0.0f;        // noise std-dev subtracted from distances
};

/// Filled in when DenoiseNlm is asked to verify its own weights.
struct NlmDiagnostics {
  /// max over pixels of |sum of normalized weights - 1|
  double max_weight_sum_error = 0.0;
};

/// Non-local means: each pixel becomes the weighted mean of the pixels in its
/// search window, weighted by exp(-max(d^2 - 2 sigma^2, 0) / h^2) where d^2 is
/// the mean squared difference between the two template patches. Borders are
/// edge-replicated. Throws BadConfig on invalid window sizes.
GrayImage DenoiseNlm(const GrayImage& image, const NlmParams& params,
                     NlmDiagnostics* diagnostics = nullptr);

/// Copies an 80x80 gray image into all three channels scaled by 1/255.
NetInput Triplicate(const GrayImage& image);

/// Reverse of Triplicate for one channel; values are rounded back to 8 bits.
GrayImage NetInputChannel(const NetInput& input, int channel);

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  /// All candidate face boxes, in any order.
  virtual std::vector<FaceBox> Detect(const GrayImage& image) const = 0;
  virtual std::unique_ptr<FaceDetector> Clone() const = 0;
};

/// Never finds anything; pairs with the center-crop policy.
class NullFaceDetector final : public FaceDetector {
 public:
  std::vector<FaceBox> Detect(const GrayImage&) const override { return {}; }
  std::unique_ptr<FaceDetector> Clone() const override {
    return std::make_unique<NullFaceDetector>();
  }
};

/// OpenCV boosted cascade (Haar or LBP XML). Detect() is serialized
/// internally, so one instance may be shared across threads; Clone() gives
/// each worker its own.
class CascadeFaceDetector final : public FaceDetector {
 public:
  /// Throws MissingInput if the file is absent, RuntimeFailure if OpenCV
  /// rejects it.
  static std::unique_ptr<CascadeFaceDetector> Load(
      const std::filesystem::path& cascade_xml);

  ~CascadeFaceDetector() override;

  std::vector<FaceBox> Detect(const GrayImage& image) const override;
  std::unique_ptr<FaceDetector> Clone() const override;

 private:
  struct Impl;
  explicit CascadeFaceDetector(std::unique_ptr<Impl> impl);

  std::unique_ptr<Impl> impl_;
  mutable std::mutex mutex_;
};

/// Largest-area box; ties go to the smallest x, then the smallest y.
std::optional<FaceBox> SelectPrimaryFace(const std::vector<FaceBox>& boxes);

std::optional<FaceBox> DetectPrimaryFace(const GrayImage& image,
                                         const FaceDetector& detector);

enum class NoFacePolicy { kSkip, kCenterCrop };

std::optional<NoFacePolicy> ParseNoFacePolicy(std::string_view text);

/// Largest centred square.
FaceBox CenterSquare(int height, int width);

struct PipelineOptions {
  NoFacePolicy policy = NoFacePolicy::kSkip;
  NlmParams nlm;
};

struct SkipMarker {
  std::string reason;
};

using PipelineResult = std::variant<NetInput, SkipMarker>;

PipelineResult PreprocessImage(const AnyImage& image,
                               const FaceDetector& detector,
                               const PipelineOptions& options);

}  // namespace ethnipipe
