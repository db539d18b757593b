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

#include "ethnipipe/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/objdetect.hpp>

#include "ethnipipe/error.hpp"
#include "ethnipipe/kernels/kernels.hpp"

namespace ethnipipe {

namespace {

std::uint8_t RoundToByte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

GrayImage ToGrayscale(const RgbImage& image) {
  GrayImage out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const std::uint8_t* p = image.pixel(y, x);
      out.at(y, x) = RoundToByte(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
  }
  return out;
}

GrayImage Crop(const GrayImage& image, const FaceBox& box) {
  if (!box.FitsInside(image.height(), image.width())) {
    throw BadConfig("crop box (" + std::to_string(box.x) + "," +
                    std::to_string(box.y) + "," + std::to_string(box.w) + "," +
                    std::to_string(box.h) + ") outside " +
                    std::to_string(image.height()) + "x" +
                    std::to_string(image.width()) + " image");
  }
  GrayImage out(box.h, box.w);
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) out.at(y, x) = image.at(box.y + y, box.x + x);
  }
  return out;
}

GrayImage ResizeBilinear(const GrayImage& image, int out_height, int out_width) {
  const int h = image.height();
  const int w = image.width();
  if (h < 1 || w < 1) throw BadConfig("cannot resize an empty image");
  if (h == out_height && w == out_width) return image;

  const double sy = static_cast<double>(h) / out_height;
  const double sx = static_cast<double>(w) / out_width;
  GrayImage out(out_height, out_width);
  for (int oy = 0; oy < out_height; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, h - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < out_width; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      const double top = (1 - wx) * image.at(y0, x0) + wx * image.at(y0, x1);
      const double bottom = (1 - wx) * image.at(y1, x0) + wx * image.at(y1, x1);
      out.at(oy, ox) = RoundToByte((1 - wy) * top + wy * bottom);
    }
  }
  return out;
}

GrayImage DenoiseNlm(const GrayImage& image, const NlmParams& params,
                     NlmDiagnostics* diagnostics) {
  const int tw = params.template_window;
  const int sw = params.search_window;
  if (tw < 1 || sw < 1 || tw % 2 == 0 || sw % 2 == 0) {
    throw BadConfig("NLM windows must be odd and positive (template " +
                    std::to_string(tw) + ", search " + std::to_string(sw) + ")");
  }
  if (tw >= sw) {
    throw BadConfig("NLM template window " + std::to_string(tw) +
                    " must be smaller than search window " + std::to_string(sw));
  }
  if (!(params.h > 0.0f)) throw BadConfig("NLM filter strength h must be > 0");

  const int height = image.height();
  const int width = image.width();
  const int t = tw / 2;
  const int s = sw / 2;
  const int pad = s + t;
  const int pw = width + 2 * pad;
  const int ph = height + 2 * pad;

  std::vector<float> padded(static_cast<std::size_t>(ph) * pw);
  for (int y = 0; y < ph; ++y) {
    const int sy = std::clamp(y - pad, 0, height - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::clamp(x - pad, 0, width - 1);
      padded[static_cast<std::size_t>(y) * pw + x] = image.at(sy, sx);
    }
  }
  auto row = [&](int y, int x) {
    return padded.data() + static_cast<std::size_t>(y) * pw + x;
  };

  const auto& k = kernels::Active();
  const float inv_patch = 1.0f / static_cast<float>(tw * tw);
  const float inv_h2 = 1.0f / (params.h * params.h);
  const float two_sigma2 = 2.0f * params.sigma * params.sigma;

  // Region of patch centres' neighbourhoods: (height + 2t) x (width + 2t).
  const int rh = height + 2 * t;
  const int rw = width + 2 * t;
  const std::size_t npix = static_cast<std::size_t>(height) * width;
  std::vector<float> diff(static_cast<std::size_t>(rh) * rw);
  std::vector<float> hsum(static_cast<std::size_t>(rh) * width);
  std::vector<float> weights(npix);
  std::vector<float> candidates(npix);
  std::vector<float> acc(npix, 0.0f);
  std::vector<float> wsum(npix, 0.0f);

  // Computes the weight and candidate planes for one search offset.
  auto offset_planes = [&](int dy, int dx) {
    for (int r = 0; r < rh; ++r) {
      const int y = pad - t + r;
      k.squared_diff(static_cast<std::size_t>(rw), row(y, pad - t),
                     row(y + dy, pad - t + dx),
                     diff.data() + static_cast<std::size_t>(r) * rw);
    }
    // Sliding box sums are exact: all terms are integers below 2^24.
    for (int r = 0; r < rh; ++r) {
      const float* d = diff.data() + static_cast<std::size_t>(r) * rw;
      float* out = hsum.data() + static_cast<std::size_t>(r) * width;
      float run = 0.0f;
      for (int c = 0; c < tw; ++c) run += d[c];
      out[0] = run;
      for (int c = 1; c < width; ++c) {
        run += d[c + tw - 1] - d[c - 1];
        out[c] = run;
      }
    }
    for (int c = 0; c < width; ++c) {
      float run = 0.0f;
      for (int r = 0; r < tw; ++r) run += hsum[static_cast<std::size_t>(r) * width + c];
      for (int y = 0; y < height; ++y) {
        if (y > 0) {
          run += hsum[static_cast<std::size_t>(y + tw - 1) * width + c] -
                 hsum[static_cast<std::size_t>(y - 1) * width + c];
        }
        const float d2 = run * inv_patch;
        weights[static_cast<std::size_t>(y) * width + c] =
            std::exp(-std::max(d2 - two_sigma2, 0.0f) * inv_h2);
      }
    }
    for (int y = 0; y < height; ++y) {
      const float* src = row(pad + y + dy, pad + dx);
      std::copy(src, src + width,
                candidates.begin() + static_cast<std::ptrdiff_t>(y) * width);
    }
  };

  for (int dy = -s; dy <= s; ++dy) {
    for (int dx = -s; dx <= s; ++dx) {
      offset_planes(dy, dx);
      k.weighted_accumulate(npix, weights.data(), candidates.data(), acc.data(),
                            wsum.data());
    }
  }

  if (diagnostics != nullptr) {
    std::vector<double> normalized(npix, 0.0);
    for (int dy = -s; dy <= s; ++dy) {
      for (int dx = -s; dx <= s; ++dx) {
        offset_planes(dy, dx);
        for (std::size_t i = 0; i < npix; ++i) {
          normalized[i] += static_cast<double>(weights[i]) / wsum[i];
        }
      }
    }
    double worst = 0.0;
    for (double v : normalized) worst = std::max(worst, std::abs(v - 1.0));
    diagnostics->max_weight_sum_error = worst;
  }

  GrayImage out(height, width);
  for (std::size_t i = 0; i < npix; ++i) {
    out.data()[i] = RoundToByte(static_cast<double>(acc[i]) / wsum[i]);
  }
  return out;
}

NetInput Triplicate(const GrayImage& image) {
  if (image.height() != kNetSide || image.width() != kNetSide) {
    throw BadConfig("triplicate expects an 80x80 image, got " +
                    std::to_string(image.height()) + "x" +
                    std::to_string(image.width()));
  }
  NetInput out;
  for (std::size_t i = 0; i < image.data().size(); ++i) {
    const float v = static_cast<float>(image.data()[i]) / 255.0f;
    out.values[i * 3 + 0] = v;
    out.values[i * 3 + 1] = v;
    out.values[i * 3 + 2] = v;
  }
  return out;
}

GrayImage NetInputChannel(const NetInput& input, int channel) {
  if (channel < 0 || channel >= kNetChannels) {
    throw BadConfig("channel index out of range");
  }
  GrayImage out(kNetSide, kNetSide);
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = RoundToByte(input.values[i * 3 + channel] * 255.0);
  }
  return out;
}

struct CascadeFaceDetector::Impl {
  std::filesystem::path source;
  cv::CascadeClassifier classifier;
};

CascadeFaceDetector::CascadeFaceDetector(std::unique_ptr<Impl> impl)
    : impl_(std::move(impl)) {}

CascadeFaceDetector::~CascadeFaceDetector() = default;

std::unique_ptr<CascadeFaceDetector> CascadeFaceDetector::Load(
    const std::filesystem::path& cascade_xml) {
  if (!std::filesystem::exists(cascade_xml)) {
    throw MissingInput("face cascade not found: " + cascade_xml.string());
  }
  auto impl = std::make_unique<Impl>();
  impl->source = cascade_xml;
  bool ok = false;
  try {
    ok = impl->classifier.load(cascade_xml.string());
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok || impl->classifier.empty()) {
    throw RuntimeFailure("face cascade failed to load: " + cascade_xml.string());
  }
  return std::unique_ptr<CascadeFaceDetector>(
      new CascadeFaceDetector(std::move(impl)));
}

std::vector<FaceBox> CascadeFaceDetector::Detect(const GrayImage& image) const {
  cv::Mat mat(image.height(), image.width(), CV_8UC1,
              const_cast<std::uint8_t*>(image.data().data()));
  std::vector<cv::Rect> rects;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    impl_->classifier.detectMultiScale(mat, rects, 1.1, 3);
  }
  std::vector<FaceBox> boxes;
  boxes.reserve(rects.size());
  for (const cv::Rect& r : rects) {
    FaceBox box{r.x, r.y, r.width, r.height};
    if (box.FitsInside(image.height(), image.width())) boxes.push_back(box);
  }
  return boxes;
}

std::unique_ptr<FaceDetector> CascadeFaceDetector::Clone() const {
  return Load(impl_->source);
}

std::optional<FaceBox> SelectPrimaryFace(const std::vector<FaceBox>& boxes) {
  if (boxes.empty()) return std::nullopt;
  return *std::min_element(boxes.begin(), boxes.end(),
                           [](const FaceBox& a, const FaceBox& b) {
                             if (a.area() != b.area()) return a.area() > b.area();
                             if (a.x != b.x) return a.x < b.x;
                             return a.y < b.y;
                           });
}

std::optional<FaceBox> DetectPrimaryFace(const GrayImage& image,
                                         const FaceDetector& detector) {
  return SelectPrimaryFace(detector.Detect(image));
}

std::optional<NoFacePolicy> ParseNoFacePolicy(std::string_view text) {
  if (text == "skip") return NoFacePolicy::kSkip;
  if (text == "center-crop") return NoFacePolicy::kCenterCrop;
  return std::nullopt;
}

FaceBox CenterSquare(int height, int width) {
  const int side = std::min(height, width);
  return FaceBox{(width - side) / 2, (height - side) / 2, side, side};
}

PipelineResult PreprocessImage(const AnyImage& image,
                               const FaceDetector& detector,
                               const PipelineOptions& options) {
  GrayImage gray = std::holds_alternative<RgbImage>(image)
                       ? ToGrayscale(std::get<RgbImage>(image))
                       : std::get<GrayImage>(image);

  std::optional<FaceBox> box = DetectPrimaryFace(gray, detector);
  if (!box) {
    if (options.policy == NoFacePolicy::kSkip) {
      return SkipMarker{"no face detected"};
    }
    box = CenterSquare(gray.height(), gray.width());
  }
  GrayImage face = Resize80(Crop(gray, *box));
  return Triplicate(DenoiseNlm(face, options.nlm));
}

}  // namespace ethnipipe
