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

// Truncated VGG-16 backbone plus the FC(head_width)+ReLU -> FC(4) -> softmax
// head, described declaratively and held as named parameters.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ethnipipe/labels.hpp"
#include "ethnipipe/tensor.hpp"
#include "ethnipipe/weights.hpp"

namespace ethnipipe {

enum class LayerKind { kConv3x3, kMaxPool2x2, kRelu, kFlatten, kDense, kSoftmax };

std::string_view LayerKindName(LayerKind kind);

struct FeatureShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

/// One layer. Conv is 3x3 stride 1 pad 1; pool is 2x2 stride 2 with floor.
/// For dense layers `in_channels`/`out_channels` hold the feature counts.
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  FeatureShape input;
  FeatureShape output;
  bool head = false;

  std::size_t ParamCount() const;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Conv widths per pooling block.
using BackboneBlocks = std::vector<std::vector<int>>;

/// The thirteen VGG-16 conv layers in five blocks.
BackboneBlocks Vgg16Blocks();

/// "vgg16" or blocks separated by '/', widths by ',' (e.g. "8,8/16").
BackboneBlocks ParseBackbone(const std::string& text);
std::string FormatBackbone(const BackboneBlocks& blocks);

struct ModelSpec {
  FeatureShape input{80, 80, 3};
  int num_classes = kNumClasses;
  int head_width = 500;
  BackboneBlocks blocks;
  std::vector<LayerSpec> layers;

  const LayerSpec& layer(const std::string& name) const;
  /// Output of the last backbone pool.
  FeatureShape BackboneOutput() const;
  std::size_t FlattenLength() const { return BackboneOutput().size(); }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Builds the layer list: for each block, convK_J + reluK_J per width then
/// poolK; then flatten, head.fc1, head.relu, head.fc2, head.softmax.
ModelSpec BuildModelSpec(const BackboneBlocks& blocks = Vgg16Blocks(),
                         int head_width = 500, int input_side = 80);

/// Stable text form used for the checkpoint digest.
std::string CanonicalSpecString(const ModelSpec& spec);
std::uint32_t SpecDigest(const ModelSpec& spec);

struct LayerParamCount {
  std::string layer;
  std::size_t count = 0;
  bool head = false;
};

struct ParamSummary {
  std::vector<LayerParamCount> layers;
  std::size_t backbone = 0;
  std::size_t head = 0;
  std::size_t total = 0;
};

ParamSummary SummarizeSpec(const ModelSpec& spec);

/// Per-channel input standardization, fitted on the training split.
struct NormStats {
  std::array<float, 3> mean{0.0f, 0.0f, 0.0f};
  std::array<float, 3> stddev{1.0f, 1.0f, 1.0f};

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

template <typename T>
struct Parameter {
  std::string name;   // archive key, e.g. "conv1_1.kernel"
  std::string layer;  // owning layer name
  Tensor<T> value;
  bool trainable = true;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Parameters in layer order: kernel then bias for every conv/dense layer.
template <typename T>
struct ModelState {
  ModelSpec spec;
  std::vector<Parameter<T>> params;
  NormStats norm;

  std::size_t Index(const std::string& name) const;
  Parameter<T>& Param(const std::string& name) { return params[Index(name)]; }
  const Parameter<T>& Param(const std::string& name) const { return params[Index(name)]; }
  std::size_t ParamCount() const;

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Zero-valued parameters with the right shapes.
template <typename T>
ModelState<T> ZeroState(const ModelSpec& spec);

/// Glorot-uniform kernels (limit sqrt(6 / (fan_in + fan_out))) and zero
/// biases, one derived stream per parameter.
void InitializeLayer(ModelState<float>& state, const std::string& layer,
                     std::uint64_t seed);

/// Every layer freshly initialized.
ModelState<float> InitializeModel(const ModelSpec& spec, std::uint64_t seed);

/// Backbone parameters copied from the archive, head freshly initialized,
/// everything trainable. Throws MissingInput naming an absent key and
/// BadConfig on a shape mismatch.
ModelState<float> LoadBackbone(const ModelSpec& spec, const WeightArchive& archive,
                               std::uint64_t seed);

/// Actual tensor sizes grouped per layer.
template <typename T>
ParamSummary SummarizeState(const ModelState<T>& state);

template <typename To, typename From>
ModelState<To> CastState(const ModelState<From>& state) {
  ModelState<To> out;
  out.spec = state.spec;
  out.norm = state.norm;
  out.params.reserve(state.params.size());
  for (const auto& p : state.params) {
    Parameter<To> q{p.name, p.layer, Tensor<To>(p.value.shape), p.trainable};
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      q.value.data[i] = static_cast<To>(p.value.data[i]);
    }
    out.params.push_back(std::move(q));
  }
  return out;
}

/// Parameters + "meta.norm.mean", "meta.norm.std", "meta.spec" and
/// "meta.spec_digest" (two 16-bit halves).
WeightArchive MakeCheckpoint(const ModelState<float>& state,
                             const std::string& source_tag = "ethnipipe");

/// Rebuilds the spec from the checkpoint, checks the digest and all shapes.
ModelState<float> LoadCheckpoint(const WeightArchive& archive);

}  // namespace ethnipipe
