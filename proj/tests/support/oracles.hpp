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

// Slow, direct reference implementations that the production code is checked
// against. None of them shares code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ethnipipe/image.hpp"
#include "ethnipipe/model.hpp"

namespace ethnipipe::oracle {

inline std::uint8_t Round8(double v) {
  if (v < 0) return 0;
  if (v > 255) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

/// One bilinear sample of `img` at output pixel (oy, ox) for an out_h x out_w
/// target, with pixel centres at +0.5.
inline double BilinearSample(const GrayImage& img, int out_h, int out_w, int oy, int ox) {
  const double src_y = (oy + 0.5) * img.height() / out_h - 0.5;
  const double src_x = (ox + 0.5) * img.width() / out_w - 0.5;
  const double cy = std::min(std::max(src_y, 0.0), img.height() - 1.0);
  const double cx = std::min(std::max(src_x, 0.0), img.width() - 1.0);
  const int y0 = static_cast<int>(std::floor(cy));
  const int x0 = static_cast<int>(std::floor(cx));
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const double ty = cy - y0;
  const double tx = cx - x0;
  return img.at(y0, x0) * (1 - ty) * (1 - tx) + img.at(y0, x1) * (1 - ty) * tx +
         img.at(y1, x0) * ty * (1 - tx) + img.at(y1, x1) * ty * tx;
}

inline GrayImage Bilinear(const GrayImage& img, int out_h, int out_w) {
  GrayImage out(out_h, out_w);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) out.at(y, x) = Round8(BilinearSample(img, out_h, out_w, y, x));
  return out;
}

/// Brute-force non-local means with clamped (edge-replicated) coordinates.
inline GrayImage Nlm(const GrayImage& img, double h, int tw, int sw, double sigma,
                     double* max_weight_sum_error = nullptr) {
  const int H = img.height(), W = img.width();
  const int t = tw / 2, s = sw / 2;
  auto px = [&](int y, int x) {
    return static_cast<double>(img.at(std::clamp(y, 0, H - 1), std::clamp(x, 0, W - 1)));
  };
  GrayImage out(H, W);
  double worst = 0.0;
  std::vector<double> weights;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      weights.clear();
      double num = 0.0, den = 0.0;
      for (int dy = -s; dy <= s; ++dy) {
        for (int dx = -s; dx <= s; ++dx) {
          double d2 = 0.0;
          for (int ty = -t; ty <= t; ++ty)
            for (int tx = -t; tx <= t; ++tx) {
              const double diff = px(y + ty, x + tx) - px(y + dy + ty, x + dx + tx);
              d2 += diff * diff;
            }
          d2 /= static_cast<double>(tw * tw);
          const double w = std::exp(-std::max(d2 - 2 * sigma * sigma, 0.0) / (h * h));
          weights.push_back(w);
          num += w * px(y + dy, x + dx);
          den += w;
        }
      }
      double total = 0.0;
      for (double w : weights) total += w / den;
      worst = std::max(worst, std::abs(total - 1.0));
      out.at(y, x) = Round8(num / den);
    }
  }
  if (max_weight_sum_error) *max_weight_sum_error = worst;
  return out;
}

/// Direct-loop forward pass over NHWC activations, for small models.
inline std::vector<double> Forward(const ModelState<double>& state, const std::vector<double>& batch) {
  const ModelSpec& spec = state.spec;
  const int side = spec.input.height;
  const std::size_t in_size = static_cast<std::size_t>(side) * side * 3;
  const std::size_t n = batch.size() / in_size;
  std::vector<double> probs;
  for (std::size_t b = 0; b < n; ++b) {
    int h = side, w = side, c = 3;
    std::vector<double> act(batch.begin() + static_cast<std::ptrdiff_t>(b * in_size),
                            batch.begin() + static_cast<std::ptrdiff_t>((b + 1) * in_size));
    for (std::size_t i = 0; i < act.size(); ++i) {
      act[i] = (act[i] - state.norm.mean[i % 3]) / state.norm.stddev[i % 3];
    }
    for (const LayerSpec& layer : spec.layers) {
      switch (layer.kind) {
        case LayerKind::kConv3x3: {
          const auto& k = state.Param(layer.name + ".kernel").value.data;
          const auto& bias = state.Param(layer.name + ".bias").value.data;
          const int co = layer.out_channels;
          std::vector<double> next(static_cast<std::size_t>(h) * w * co);
          for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
              for (int o = 0; o < co; ++o) {
                double sum = bias[o];
                for (int ky = 0; ky < 3; ++ky)
                  for (int kx = 0; kx < 3; ++kx) {
                    const int sy = y + ky - 1, sx = x + kx - 1;
                    if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                    for (int i = 0; i < c; ++i) {
                      sum += act[(static_cast<std::size_t>(sy) * w + sx) * c + i] *
                             k[((static_cast<std::size_t>(ky) * 3 + kx) * c + i) * co + o];
                    }
                  }
                next[(static_cast<std::size_t>(y) * w + x) * co + o] = sum;
              }
          act = std::move(next);
          c = co;
          break;
        }
        case LayerKind::kRelu:
          for (double& v : act) v = std::max(v, 0.0);
          break;
        case LayerKind::kMaxPool2x2: {
          const int oh = h / 2, ow = w / 2;
          std::vector<double> next(static_cast<std::size_t>(oh) * ow * c);
          for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
              for (int i = 0; i < c; ++i) {
                double m = -INFINITY;
                for (int py = 0; py < 2; ++py)
                  for (int px = 0; px < 2; ++px)
                    m = std::max(m, act[(static_cast<std::size_t>(2 * y + py) * w + 2 * x + px) * c + i]);
                next[(static_cast<std::size_t>(y) * ow + x) * c + i] = m;
              }
          act = std::move(next);
          h = oh;
          w = ow;
          break;
        }
        case LayerKind::kFlatten:
          break;
        case LayerKind::kDense: {
          const auto& k = state.Param(layer.name + ".kernel").value;
          const auto& bias = state.Param(layer.name + ".bias").value.data;
          const std::size_t in = k.shape[0], out = k.shape[1];
          std::vector<double> next(out);
          for (std::size_t o = 0; o < out; ++o) {
            double sum = bias[o];
            for (std::size_t i = 0; i < in; ++i) sum += act[i] * k.data[i * out + o];
            next[o] = sum;
          }
          act = std::move(next);
          break;
        }
        case LayerKind::kSoftmax: {
          const double m = *std::max_element(act.begin(), act.end());
          double z = 0.0;
          for (double& v : act) z += (v = std::exp(v - m));
          for (double& v : act) v /= z;
          break;
        }
      }
    }
    probs.insert(probs.end(), act.begin(), act.end());
  }
  return probs;
}

}  // namespace ethnipipe::oracle
