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

// Data-parallel inner loops used by the network and the denoiser.
//
// Every kernel has a portable scalar reference (templated so the network can
// run in double precision for gradient checks) and, for float, an AVX2+FMA
// variant. The variant is picked once at startup from CPUID; setting
// ETHNIPIPE_ISA=scalar forces the reference path. All matrices are dense and
// row-major.

#include <algorithm>
#include <cstddef>
#include <string_view>
#include <type_traits>

namespace ethnipipe::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view IsaName(Isa isa);
bool IsaSupported(Isa isa);

struct KernelTable {
  Isa isa;
  // C[m,n] (+)= A[m,k] * B[k,n]
  void (*gemm_nn)(int m, int n, int k, const float* a, const float* b,
                  float* c, bool accumulate);
  // C[m,n] (+)= A^T * B with A stored [k,m]
  void (*gemm_tn)(int m, int n, int k, const float* a, const float* b,
                  float* c, bool accumulate);
  // C[m,n] (+)= A * B^T with B stored [n,k]
  void (*gemm_nt)(int m, int n, int k, const float* a, const float* b,
                  float* c, bool accumulate);
  // v = momentum * v + g;  w = w - lr * v
  void (*momentum_update)(std::size_t n, float lr, float momentum,
                          const float* g, float* v, float* w);
  // out = (a - b)^2
  void (*squared_diff)(std::size_t n, const float* a, const float* b,
                       float* out);
  // acc += w * x;  wsum += w
  void (*weighted_accumulate)(std::size_t n, const float* w, const float* x,
                              float* acc, float* wsum);
};

const KernelTable& Table(Isa isa);

/// The table in use for float work.
const KernelTable& Active();

/// Overrides the startup choice. Throws if the ISA is unsupported here.
void SetActive(Isa isa);

namespace scalar {

template <typename T>
void GemmNN(int m, int n, int k, const T* a, const T* b, T* c,
            bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, T(0));
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const T aip = a[static_cast<std::size_t>(i) * k + p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <typename T>
void GemmTN(int m, int n, int k, const T* a, const T* b, T* c,
            bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, T(0));
  for (int p = 0; p < k; ++p) {
    const T* arow = a + static_cast<std::size_t>(p) * m;
    const T* brow = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const T api = arow[i];
      T* crow = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

template <typename T>
void GemmNT(int m, int n, int k, const T* a, const T* b, T* c,
            bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::size_t>(j) * k;
      T sum = 0;
      for (int p = 0; p < k; ++p) sum += arow[p] * brow[p];
      T& out = c[static_cast<std::size_t>(i) * n + j];
      out = accumulate ? out + sum : sum;
    }
  }
}

template <typename T>
void MomentumUpdate(std::size_t n, T lr, T momentum, const T* g, T* v, T* w) {
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = momentum * v[i] + g[i];
    w[i] = w[i] - lr * v[i];
  }
}

template <typename T>
void SquaredDiff(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const T d = a[i] - b[i];
    out[i] = d * d;
  }
}

template <typename T>
void WeightedAccumulate(std::size_t n, const T* w, const T* x, T* acc,
                        T* wsum) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += w[i] * x[i];
    wsum[i] += w[i];
  }
}

}  // namespace scalar

/// Type-generic front door: float goes through the active table, anything
/// else through the scalar templates.
template <typename T>
void GemmNN(int m, int n, int k, const T* a, const T* b, T* c,
            bool accumulate) {
  if constexpr (std::is_same_v<T, float>) {
    Active().gemm_nn(m, n, k, a, b, c, accumulate);
  } else {
    scalar::GemmNN(m, n, k, a, b, c, accumulate);
  }
}

template <typename T>
void GemmTN(int m, int n, int k, const T* a, const T* b, T* c,
            bool accumulate) {
  if constexpr (std::is_same_v<T, float>) {
    Active().gemm_tn(m, n, k, a, b, c, accumulate);
  } else {
    scalar::GemmTN(m, n, k, a, b, c, accumulate);
  }
}

template <typename T>
void GemmNT(int m, int n, int k, const T* a, const T* b, T* c,
            bool accumulate) {
  if constexpr (std::is_same_v<T, float>) {
    Active().gemm_nt(m, n, k, a, b, c, accumulate);
  } else {
    scalar::GemmNT(m, n, k, a, b, c, accumulate);
  }
}

template <typename T>
void MomentumUpdate(std::size_t n, T lr, T momentum, const T* g, T* v, T* w) {
  if constexpr (std::is_same_v<T, float>) {
    Active().momentum_update(n, lr, momentum, g, v, w);
  } else {
    scalar::MomentumUpdate(n, lr, momentum, g, v, w);
  }
}

}  // namespace ethnipipe::kernels
