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

#include "ethnipipe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ethnipipe/error.hpp"

namespace ethnipipe {
namespace {

struct Style {
  int tone;        // face gray level
  int background;  // background gray level
};

constexpr Style kStyles[kNumClasses] = {{70, 190}, {150, 60}, {215, 100}, {120, 230}};

// Texture value in [0, 1] for class `c` at face-relative coordinates.
double Texture(int c, double u, double v) {
  constexpr double kPi = 3.14159265358979323846;
  switch (c) {
    case 0: return 0.5 + 0.5 * std::sin(v * 6 * kPi);                      // horizontal bands
    case 1: return 0.5 + 0.5 * std::sin(u * 6 * kPi);                      // vertical bands
    case 2: return (std::sin(u * 6 * kPi) * std::sin(v * 6 * kPi)) > 0;    // checker
    default: return std::hypot(u - 0.5, v - 0.5) < 0.25 ? 1.0 : 0.0;       // blob
  }
}

std::uint8_t Clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

RgbImage GenerateSyntheticFace(EthnicLabel label, std::mt19937_64& rng, int height, int width) {
  if (height < 16 || width < 16) throw BadConfig("synthetic image must be at least 16x16");
  const int c = LabelCode(label);
  const Style style = kStyles[c];
  std::uniform_real_distribution<double> jitter(-0.06, 0.06);
  std::uniform_real_distribution<double> scale(0.85, 1.0);
  std::uniform_int_distribution<int> tint(-12, 12);
  std::normal_distribution<double> noise(0.0, 6.0);

  const double side = std::min(height, width);
  const double cx = width / 2.0 + jitter(rng) * side;
  const double cy = height / 2.0 + jitter(rng) * side;
  const double rx = 0.36 * side * scale(rng);
  const double ry = 0.46 * side * scale(rng);
  const int tone = style.tone + tint(rng);
  const int bg = style.background + tint(rng);
  const int r_off = tint(rng), b_off = tint(rng);

  std::vector<std::uint8_t> data(static_cast<std::size_t>(height) * width * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = (x + 0.5 - cx) / rx;
      const double dy = (y + 0.5 - cy) / ry;
      double g = bg;
      if (dx * dx + dy * dy <= 1.0) {
        g = tone;
        const double u = (dx + 1.0) / 2.0;
        const double v = (dy + 1.0) / 2.0;
        const bool eyes = v > 0.28 && v < 0.46 && ((u > 0.18 && u < 0.42) || (u > 0.58 && u < 0.82));
        const bool mouth = v > 0.66 && v < 0.80 && u > 0.3 && u < 0.7;
        if (eyes || mouth) g = 25.0 + 200.0 * Texture(c, u, v);
      }
      g += noise(rng);
      std::uint8_t* p = data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
      p[0] = Clamp8(g + r_off);
      p[1] = Clamp8(g);
      p[2] = Clamp8(g + b_off);
    }
  }
  return RgbImage(height, width, std::move(data));
}

std::size_t WriteSyntheticDataset(const std::filesystem::path& root,
                                  const SyntheticOptions& options) {
  if (options.per_class < 1) throw BadConfig("per_class must be >= 1");
  if (options.min_side < 16 || options.max_side < options.min_side) {
    throw BadConfig("synthetic side range is invalid");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> side(options.min_side, options.max_side);
  std::size_t written = 0;
  for (EthnicLabel label : kAllLabels) {
    const auto dir = root / LabelName(label);
    std::filesystem::create_directories(dir);
    for (int i = 0; i < options.per_class; ++i) {
      const int h = side(rng);
      const int w = side(rng);
      char name[32];
      std::snprintf(name, sizeof name, "synth_%04d.png", i);
      WritePng(dir / name, GenerateSyntheticFace(label, rng, h, w));
      ++written;
    }
  }
  return written;
}

}  // namespace ethnipipe
