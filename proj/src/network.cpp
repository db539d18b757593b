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

#include "ethnipipe/network.hpp"

#include <algorithm>
#include <string>

#include "ethnipipe/error.hpp"
#include "ethnipipe/kernels/kernels.hpp"
#include "ethnipipe/loss.hpp"

namespace ethnipipe {

namespace {

// Rows are output pixels, columns (ky, kx, ci); zero outside the image.
template <typename T>
void Im2Col(const T* in, int h, int w, int c, T* cols) {
  const std::size_t row_len = 9 * static_cast<std::size_t>(c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T* row = cols + (static_cast<std::size_t>(y) * w + x) * row_len;
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = y + ky - 1;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = x + kx - 1;
          T* dst = row + static_cast<std::size_t>(ky * 3 + kx) * c;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            std::fill(dst, dst + c, T(0));
          } else {
            const T* src = in + (static_cast<std::size_t>(iy) * w + ix) * c;
            std::copy(src, src + c, dst);
          }
        }
      }
    }
  }
}

template <typename T>
void Col2ImAdd(const T* cols, int h, int w, int c, T* grad_in) {
  const std::size_t row_len = 9 * static_cast<std::size_t>(c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const T* row = cols + (static_cast<std::size_t>(y) * w + x) * row_len;
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = y + ky - 1;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = x + kx - 1;
          if (ix < 0 || ix >= w) continue;
          const T* src = row + static_cast<std::size_t>(ky * 3 + kx) * c;
          T* dst = grad_in + (static_cast<std::size_t>(iy) * w + ix) * c;
          for (int ci = 0; ci < c; ++ci) dst[ci] += src[ci];
        }
      }
    }
  }
}

template <typename T>
void AddBias(T* out, std::size_t rows, const std::vector<T>& bias) {
  const std::size_t n = bias.size();
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = out + r * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += bias[j];
  }
}

template <typename T>
void AccumulateColumnSums(const T* grad, std::size_t rows, std::vector<T>& bias_grad) {
  const std::size_t n = bias_grad.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = grad + r * n;
    for (std::size_t j = 0; j < n; ++j) bias_grad[j] += row[j];
  }
}

// Index of the first maximum of the 2x2 window feeding pool output (oy, ox, ch).
template <typename T>
std::size_t PoolArgMax(const T* in, const FeatureShape& s, int oy, int ox, int ch) {
  std::size_t best = 0;
  bool first = true;
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const std::size_t i =
          (static_cast<std::size_t>(2 * oy + dy) * s.width + (2 * ox + dx)) * s.channels + ch;
      if (first || in[i] > in[best]) {
        best = i;
        first = false;
      }
    }
  }
  return best;
}

// Param index of each layer's kernel (bias follows), or -1.
template <typename T>
std::vector<int> ParamSlots(const ModelState<T>& state) {
  std::vector<int> slots(state.spec.layers.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < state.spec.layers.size(); ++i) {
    if (state.spec.layers[i].ParamCount() > 0) {
      slots[i] = next;
      next += 2;
    }
  }
  if (static_cast<std::size_t>(next) != state.params.size()) {
    throw RuntimeFailure("model state parameters do not match its spec");
  }
  return slots;
}

template <typename T>
void RunLayer(const LayerSpec& l, const ModelState<T>& state, int slot, int batch,
              const std::vector<T>& in, std::vector<T>& out) {
  const std::size_t in_size = l.input.size();
  const std::size_t out_size = l.output.size();
  out.assign(static_cast<std::size_t>(batch) * out_size, T(0));
  switch (l.kind) {
    case LayerKind::kConv3x3: {
      const auto& kernel = state.params[slot].value.data;
      const auto& bias = state.params[slot + 1].value.data;
      const int hw = l.input.height * l.input.width;
      const int k = 9 * l.in_channels;
      std::vector<T> cols(static_cast<std::size_t>(hw) * k);
      for (int b = 0; b < batch; ++b) {
        Im2Col(in.data() + b * in_size, l.input.height, l.input.width, l.in_channels,
               cols.data());
        T* dst = out.data() + b * out_size;
        kernels::GemmNN(hw, l.out_channels, k, cols.data(), kernel.data(), dst, false);
        AddBias(dst, static_cast<std::size_t>(hw), bias);
      }
      break;
    }
    case LayerKind::kRelu:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(in[i], T(0));
      break;
    case LayerKind::kMaxPool2x2:
      for (int b = 0; b < batch; ++b) {
        const T* src = in.data() + b * in_size;
        T* dst = out.data() + b * out_size;
        for (int oy = 0; oy < l.output.height; ++oy) {
          for (int ox = 0; ox < l.output.width; ++ox) {
            for (int ch = 0; ch < l.output.channels; ++ch) {
              dst[(static_cast<std::size_t>(oy) * l.output.width + ox) * l.output.channels + ch] =
                  src[PoolArgMax(src, l.input, oy, ox, ch)];
            }
          }
        }
      }
      break;
    case LayerKind::kFlatten:
      out = in;
      break;
    case LayerKind::kDense: {
      const auto& kernel = state.params[slot].value.data;
      const auto& bias = state.params[slot + 1].value.data;
      kernels::GemmNN(batch, l.out_channels, l.in_channels, in.data(), kernel.data(),
                      out.data(), false);
      AddBias(out.data(), static_cast<std::size_t>(batch), bias);
      break;
    }
    case LayerKind::kSoftmax:
      out = Softmax<T>(in, static_cast<int>(out_size));
      break;
  }
}

}  // namespace

template <typename T>
std::vector<T> Forward(const ModelState<T>& state, std::span<const T> batch, Mode mode,
                       ForwardTrace<T>* trace) {
  (void)mode;  // no layer behaves differently between train and eval
  const ModelSpec& spec = state.spec;
  const std::size_t in_size = spec.input.size();
  if (batch.empty() || batch.size() % in_size != 0) {
    throw BadConfig("input batch of " + std::to_string(batch.size()) +
                    " values is not a positive multiple of " + std::to_string(in_size));
  }
  const int count = static_cast<int>(batch.size() / in_size);
  const auto slots = ParamSlots(state);

  std::vector<T> cur(batch.begin(), batch.end());
  const int channels = spec.input.channels;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    const int c = static_cast<int>(i % channels);
    cur[i] = (cur[i] - static_cast<T>(state.norm.mean[c])) / static_cast<T>(state.norm.stddev[c]);
  }
  if (trace != nullptr) {
    trace->batch = count;
    trace->input = cur;
    trace->outputs.assign(spec.layers.size(), {});
  }

  std::vector<T> next;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    RunLayer(spec.layers[i], state, slots[i], count, cur, next);
    if (trace != nullptr) trace->outputs[i] = next;
    cur.swap(next);
  }
  return cur;
}

template <typename T>
Gradients<T> ZeroGradients(const ModelState<T>& state) {
  Gradients<T> grads;
  grads.reserve(state.params.size());
  for (const auto& p : state.params) grads.emplace_back(p.value.shape);
  return grads;
}

template <typename T>
Gradients<T> BackwardFromLogits(const ModelState<T>& state, const ForwardTrace<T>& trace,
                                std::span<const T> logit_grad) {
  const ModelSpec& spec = state.spec;
  const auto slots = ParamSlots(state);
  Gradients<T> grads = ZeroGradients(state);
  const int batch = trace.batch;

  // Walk back from the layer feeding the softmax.
  int i = static_cast<int>(spec.layers.size()) - 1;
  if (spec.layers[i].kind == LayerKind::kSoftmax) --i;
  std::vector<T> grad(logit_grad.begin(), logit_grad.end());
  std::vector<T> grad_in;

  for (; i >= 0; --i) {
    const LayerSpec& l = spec.layers[i];
    const std::vector<T>& in = i == 0 ? trace.input : trace.outputs[i - 1];
    const std::vector<T>& out = trace.outputs[i];
    const std::size_t in_size = l.input.size();
    const std::size_t out_size = l.output.size();
    const bool need_input_grad = i > 0;
    grad_in.assign(need_input_grad ? static_cast<std::size_t>(batch) * in_size : 0, T(0));

    switch (l.kind) {
      case LayerKind::kConv3x3: {
        const int slot = slots[i];
        const auto& kernel = state.params[slot].value.data;
        auto& dkernel = grads[slot].data;
        auto& dbias = grads[slot + 1].data;
        const int hw = l.input.height * l.input.width;
        const int k = 9 * l.in_channels;
        std::vector<T> cols(static_cast<std::size_t>(hw) * k);
        std::vector<T> dcols(need_input_grad ? cols.size() : 0);
        for (int b = 0; b < batch; ++b) {
          const T* g = grad.data() + b * out_size;
          Im2Col(in.data() + b * in_size, l.input.height, l.input.width, l.in_channels,
                 cols.data());
          kernels::GemmTN(k, l.out_channels, hw, cols.data(), g, dkernel.data(), true);
          AccumulateColumnSums(g, static_cast<std::size_t>(hw), dbias);
          if (need_input_grad) {
            kernels::GemmNT(hw, k, l.out_channels, g, kernel.data(), dcols.data(), false);
            Col2ImAdd(dcols.data(), l.input.height, l.input.width, l.in_channels,
                      grad_in.data() + b * in_size);
          }
        }
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t j = 0; j < grad_in.size(); ++j) {
          grad_in[j] = out[j] > T(0) ? grad[j] : T(0);
        }
        break;
      case LayerKind::kMaxPool2x2:
        if (!need_input_grad) break;
        for (int b = 0; b < batch; ++b) {
          const T* src = in.data() + b * in_size;
          const T* g = grad.data() + b * out_size;
          T* dst = grad_in.data() + b * in_size;
          for (int oy = 0; oy < l.output.height; ++oy) {
            for (int ox = 0; ox < l.output.width; ++ox) {
              for (int ch = 0; ch < l.output.channels; ++ch) {
                dst[PoolArgMax(src, l.input, oy, ox, ch)] +=
                    g[(static_cast<std::size_t>(oy) * l.output.width + ox) * l.output.channels +
                      ch];
              }
            }
          }
        }
        break;
      case LayerKind::kFlatten:
        if (need_input_grad) grad_in = grad;
        break;
      case LayerKind::kDense: {
        const int slot = slots[i];
        const auto& kernel = state.params[slot].value.data;
        kernels::GemmTN(l.in_channels, l.out_channels, batch, in.data(), grad.data(),
                        grads[slot].data.data(), true);
        AccumulateColumnSums(grad.data(), static_cast<std::size_t>(batch), grads[slot + 1].data);
        if (need_input_grad) {
          kernels::GemmNT(batch, l.in_channels, l.out_channels, grad.data(), kernel.data(),
                          grad_in.data(), false);
        }
        break;
      }
      case LayerKind::kSoftmax:
        throw RuntimeFailure("softmax may only be the final layer");
    }
    grad.swap(grad_in);
  }
  return grads;
}

template <typename T>
LossGradients<T> ForwardBackward(const ModelState<T>& state, std::span<const T> batch,
                                 std::span<const int> labels) {
  ForwardTrace<T> trace;
  LossGradients<T> result;
  result.probs = Forward(state, batch, Mode::kTrain, &trace);
  const int classes = state.spec.num_classes;
  result.loss = CrossEntropy<T>(result.probs, labels, classes);
  const auto logit_grad = SoftmaxCrossEntropyLogitGrad<T>(result.probs, labels, classes);
  result.grads = BackwardFromLogits<T>(state, trace, logit_grad);
  return result;
}

#define ETHNIPIPE_INSTANTIATE_NETWORK(T)                                                   \
  template std::vector<T> Forward<T>(const ModelState<T>&, std::span<const T>, Mode,       \
                                     ForwardTrace<T>*);                                    \
  template Gradients<T> ZeroGradients<T>(const ModelState<T>&);                            \
  template Gradients<T> BackwardFromLogits<T>(const ModelState<T>&, const ForwardTrace<T>&, \
                                              std::span<const T>);                         \
  template LossGradients<T> ForwardBackward<T>(const ModelState<T>&, std::span<const T>,   \
                                               std::span<const int>);

ETHNIPIPE_INSTANTIATE_NETWORK(float)
ETHNIPIPE_INSTANTIATE_NETWORK(double)

#undef ETHNIPIPE_INSTANTIATE_NETWORK

}  // namespace ethnipipe
