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

#include "ethnipipe/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "ethnipipe/error.hpp"

namespace ethnipipe {

std::string_view LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv3x3:
      return "conv3x3";
    case LayerKind::kMaxPool2x2:
      return "maxpool2x2";
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kFlatten:
      return "flatten";
    case LayerKind::kDense:
      return "dense";
    case LayerKind::kSoftmax:
      return "softmax";
  }
  return "?";
}

std::size_t LayerSpec::ParamCount() const {
  const auto cin = static_cast<std::size_t>(in_channels);
  const auto cout = static_cast<std::size_t>(out_channels);
  switch (kind) {
    case LayerKind::kConv3x3:
      return 9 * cin * cout + cout;
    case LayerKind::kDense:
      return cin * cout + cout;
    default:
      return 0;
  }
}

BackboneBlocks Vgg16Blocks() {
  return {{64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}};
}

BackboneBlocks ParseBackbone(const std::string& text) {
  if (text == "vgg16") return Vgg16Blocks();
  BackboneBlocks blocks;
  std::stringstream outer(text);
  std::string block;
  while (std::getline(outer, block, '/')) {
    std::vector<int> widths;
    std::stringstream inner(block);
    std::string w;
    while (std::getline(inner, w, ',')) {
      int value = 0;
      try {
        value = std::stoi(w);
      } catch (const std::exception&) {
        throw BadConfig("bad backbone width '" + w + "' in '" + text + "'");
      }
      if (value < 1) throw BadConfig("backbone widths must be positive");
      widths.push_back(value);
    }
    if (widths.empty()) throw BadConfig("empty backbone block in '" + text + "'");
    blocks.push_back(std::move(widths));
  }
  if (blocks.empty()) throw BadConfig("backbone description is empty");
  return blocks;
}

std::string FormatBackbone(const BackboneBlocks& blocks) {
  if (blocks == Vgg16Blocks()) return "vgg16";
  std::string out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b) out += "/";
    for (std::size_t j = 0; j < blocks[b].size(); ++j) {
      if (j) out += ",";
      out += std::to_string(blocks[b][j]);
    }
  }
  return out;
}

const LayerSpec& ModelSpec::layer(const std::string& name) const {
  for (const LayerSpec& l : layers) {
    if (l.name == name) return l;
  }
  throw MissingInput("model has no layer '" + name + "'");
}

FeatureShape ModelSpec::BackboneOutput() const {
  FeatureShape last = input;
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::kFlatten) return l.input;
    last = l.output;
  }
  return last;
}

ModelSpec BuildModelSpec(const BackboneBlocks& blocks, int head_width, int input_side) {
  if (blocks.empty()) throw BadConfig("backbone needs at least one block");
  if (head_width < 1) throw BadConfig("head width must be positive");
  ModelSpec spec;
  spec.input = FeatureShape{input_side, input_side, 3};
  spec.head_width = head_width;
  spec.blocks = blocks;

  FeatureShape shape = spec.input;
  auto add = [&](LayerKind kind, std::string name, FeatureShape out, int cin = 0,
                 int cout = 0, bool head = false) {
    spec.layers.push_back(LayerSpec{kind, std::move(name), cin, cout, shape, out, head});
    shape = out;
  };
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string k = std::to_string(b + 1);
    for (std::size_t j = 0; j < blocks[b].size(); ++j) {
      const std::string suffix = k + "_" + std::to_string(j + 1);
      const int cout = blocks[b][j];
      if (cout < 1) throw BadConfig("backbone widths must be positive");
      add(LayerKind::kConv3x3, "conv" + suffix, {shape.height, shape.width, cout},
          shape.channels, cout);
      add(LayerKind::kRelu, "relu" + suffix, shape);
    }
    if (shape.height < 2 || shape.width < 2) {
      throw BadConfig("input too small for " + std::to_string(blocks.size()) + " pooling stages");
    }
    add(LayerKind::kMaxPool2x2, "pool" + k,
        {shape.height / 2, shape.width / 2, shape.channels});
  }
  const int flat = static_cast<int>(shape.size());
  add(LayerKind::kFlatten, "flatten", {1, 1, flat});
  add(LayerKind::kDense, "head.fc1", {1, 1, head_width}, flat, head_width, true);
  add(LayerKind::kRelu, "head.relu", shape, 0, 0, true);
  add(LayerKind::kDense, "head.fc2", {1, 1, spec.num_classes}, head_width,
      spec.num_classes, true);
  add(LayerKind::kSoftmax, "head.softmax", shape, 0, 0, true);
  return spec;
}

std::string CanonicalSpecString(const ModelSpec& spec) {
  std::ostringstream out;
  out << "input=" << spec.input.height << "x" << spec.input.width << "x"
      << spec.input.channels << ";classes=" << spec.num_classes
      << ";head=" << spec.head_width << ";backbone=" << FormatBackbone(spec.blocks);
  for (const LayerSpec& l : spec.layers) {
    out << ";" << l.name << ":" << LayerKindName(l.kind) << ":" << l.in_channels << ">"
        << l.out_channels;
  }
  return out.str();
}

std::uint32_t SpecDigest(const ModelSpec& spec) {
  const std::string text = CanonicalSpecString(spec);
  return Crc32(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ParamSummary SummarizeSpec(const ModelSpec& spec) {
  ParamSummary summary;
  for (const LayerSpec& l : spec.layers) {
    const std::size_t n = l.ParamCount();
    if (n == 0) continue;
    summary.layers.push_back({l.name, n, l.head});
    (l.head ? summary.head : summary.backbone) += n;
  }
  summary.total = summary.backbone + summary.head;
  return summary;
}

template <typename T>
std::size_t ModelState<T>::Index(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == name) return i;
  }
  throw MissingInput("model has no parameter '" + name + "'");
}

template <typename T>
std::size_t ModelState<T>::ParamCount() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value.size();
  return n;
}

namespace {

Shape KernelShape(const LayerSpec& l) {
  const auto cin = static_cast<std::uint32_t>(l.in_channels);
  const auto cout = static_cast<std::uint32_t>(l.out_channels);
  if (l.kind == LayerKind::kConv3x3) return {3, 3, cin, cout};
  return {cin, cout};
}

}  // namespace

template <typename T>
ModelState<T> ZeroState(const ModelSpec& spec) {
  ModelState<T> state;
  state.spec = spec;
  for (const LayerSpec& l : spec.layers) {
    if (l.kind != LayerKind::kConv3x3 && l.kind != LayerKind::kDense) continue;
    state.params.push_back({l.name + ".kernel", l.name, Tensor<T>(KernelShape(l)), true});
    state.params.push_back(
        {l.name + ".bias", l.name,
         Tensor<T>(Shape{static_cast<std::uint32_t>(l.out_channels)}), true});
  }
  return state;
}

void InitializeLayer(ModelState<float>& state, const std::string& layer,
                     std::uint64_t seed) {
  const LayerSpec& l = state.spec.layer(layer);
  const double receptive = l.kind == LayerKind::kConv3x3 ? 9.0 : 1.0;
  const double fan_in = receptive * l.in_channels;
  const double fan_out = receptive * l.out_channels;
  const auto limit = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));

  // Layer position feeds the stream so every layer draws differently.
  std::uint64_t position = 0;
  for (std::size_t i = 0; i < state.spec.layers.size(); ++i) {
    if (state.spec.layers[i].name == layer) position = i;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(position)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<float> dist(-limit, limit);
  for (float& w : state.Param(layer + ".kernel").value.data) w = dist(rng);
  auto& bias = state.Param(layer + ".bias").value.data;
  std::fill(bias.begin(), bias.end(), 0.0f);
}

ModelState<float> InitializeModel(const ModelSpec& spec, std::uint64_t seed) {
  ModelState<float> state = ZeroState<float>(spec);
  for (const LayerSpec& l : spec.layers) {
    if (l.ParamCount() > 0) InitializeLayer(state, l.name, seed);
  }
  return state;
}

ModelState<float> LoadBackbone(const ModelSpec& spec, const WeightArchive& archive,
                               std::uint64_t seed) {
  ModelState<float> state = ZeroState<float>(spec);
  for (const LayerSpec& l : spec.layers) {
    if (l.ParamCount() == 0) continue;
    if (l.head) {
      InitializeLayer(state, l.name, seed);
      continue;
    }
    for (const char* suffix : {".kernel", ".bias"}) {
      Parameter<float>& p = state.Param(l.name + suffix);
      const Tensor<float>& src = archive.At(p.name);
      if (src.shape != p.value.shape) {
        throw BadConfig("shape mismatch for '" + p.name + "': expected " +
                        ShapeString(p.value.shape) + ", archive has " +
                        ShapeString(src.shape));
      }
      p.value.data = src.data;
    }
  }
  return state;
}

template <typename T>
ParamSummary SummarizeState(const ModelState<T>& state) {
  ParamSummary summary;
  for (const auto& p : state.params) {
    const bool head = state.spec.layer(p.layer).head;
    if (summary.layers.empty() || summary.layers.back().layer != p.layer) {
      summary.layers.push_back({p.layer, 0, head});
    }
    summary.layers.back().count += p.value.size();
    (head ? summary.head : summary.backbone) += p.value.size();
  }
  summary.total = summary.backbone + summary.head;
  return summary;
}

WeightArchive MakeCheckpoint(const ModelState<float>& state, const std::string& source_tag) {
  WeightArchive archive;
  for (const auto& p : state.params) archive.Set(p.name, p.value);
  archive.Set("meta.norm.mean",
              Tensor<float>({3}, {state.norm.mean.begin(), state.norm.mean.end()}));
  archive.Set("meta.norm.std",
              Tensor<float>({3}, {state.norm.stddev.begin(), state.norm.stddev.end()}));
  const ModelSpec& s = state.spec;
  std::vector<float> encoded = {static_cast<float>(s.input.height),
                                static_cast<float>(s.input.width),
                                static_cast<float>(s.head_width),
                                static_cast<float>(s.blocks.size())};
  for (const auto& block : s.blocks) {
    encoded.push_back(static_cast<float>(block.size()));
    for (int w : block) encoded.push_back(static_cast<float>(w));
  }
  const auto n = static_cast<std::uint32_t>(encoded.size());
  archive.Set("meta.spec", Tensor<float>({n}, std::move(encoded)));
  const std::uint32_t digest = SpecDigest(s);
  archive.Set("meta.spec_digest", Tensor<float>({2}, {static_cast<float>(digest >> 16),
                                                      static_cast<float>(digest & 0xffff)}));
  archive.set_source_tag(source_tag);
  return archive;
}

ModelState<float> LoadCheckpoint(const WeightArchive& archive) {
  const auto& enc = archive.At("meta.spec").data;
  auto read = [&](std::size_t i) {
    if (i >= enc.size()) throw RuntimeFailure("checkpoint: truncated meta.spec");
    return static_cast<int>(enc[i]);
  };
  const int side = read(0);
  const int head_width = read(2);
  const int nblocks = read(3);
  BackboneBlocks blocks;
  std::size_t pos = 4;
  for (int b = 0; b < nblocks; ++b) {
    const int n = read(pos++);
    std::vector<int> widths;
    for (int j = 0; j < n; ++j) widths.push_back(read(pos++));
    blocks.push_back(std::move(widths));
  }
  ModelSpec spec = BuildModelSpec(blocks, head_width, side);

  const auto& digest = archive.At("meta.spec_digest").data;
  if (digest.size() != 2 ||
      ((static_cast<std::uint32_t>(digest[0]) << 16) | static_cast<std::uint32_t>(digest[1])) !=
          SpecDigest(spec)) {
    throw RuntimeFailure("checkpoint: model spec digest mismatch");
  }

  ModelState<float> state = ZeroState<float>(spec);
  for (auto& p : state.params) {
    const Tensor<float>& src = archive.At(p.name);
    if (src.shape != p.value.shape) {
      throw BadConfig("shape mismatch for '" + p.name + "': expected " +
                      ShapeString(p.value.shape) + ", archive has " + ShapeString(src.shape));
    }
    p.value.data = src.data;
  }
  const auto& mean = archive.At("meta.norm.mean").data;
  const auto& stddev = archive.At("meta.norm.std").data;
  if (mean.size() != 3 || stddev.size() != 3) throw RuntimeFailure("checkpoint: bad norm stats");
  std::copy(mean.begin(), mean.end(), state.norm.mean.begin());
  std::copy(stddev.begin(), stddev.end(), state.norm.stddev.begin());
  return state;
}

template struct ModelState<float>;
template struct ModelState<double>;
template ModelState<float> ZeroState<float>(const ModelSpec&);
template ModelState<double> ZeroState<double>(const ModelSpec&);
template ParamSummary SummarizeState<float>(const ModelState<float>&);
template ParamSummary SummarizeState<double>(const ModelState<double>&);

}  // namespace ethnipipe
