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

// AVX2+FMA float kernels. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here may be called unless IsaSupported(kAvx2).
// Compiled with -ffp-contract=off so the elementwise kernels round exactly
// like the scalar reference.

#include "ethnipipe/kernels/avx2.hpp"

#include <immintrin.h>

#include <cstdint>

namespace ethnipipe::kernels::avx2 {

namespace {

alignas(32) constexpr std::int32_t kMaskTable[16] = {
    -1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};

// Lanes [0, rem) enabled, rem in 1..7.
inline __m256i TailMask(int rem) {
  return _mm256_loadu_si256(
      reinterpret_cast<const __m256i*>(kMaskTable + 8 - rem));
}

inline float HorizontalSum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

// R rows of C starting at i0. A is addressed as a[i * rs + p * cs] so the
// same code serves both A and A^T.
template <int R>
void RowBlock(int i0, int n, int k, const float* a, std::size_t rs,
              std::size_t cs, const float* b, float* c, bool accumulate) {
  int j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256 lo[R];
    __m256 hi[R];
    for (int r = 0; r < R; ++r) {
      lo[r] = _mm256_setzero_ps();
      hi[r] = _mm256_setzero_ps();
    }
    for (int p = 0; p < k; ++p) {
      const float* brow = b + static_cast<std::size_t>(p) * n + j;
      const __m256 b0 = _mm256_loadu_ps(brow);
      const __m256 b1 = _mm256_loadu_ps(brow + 8);
      for (int r = 0; r < R; ++r) {
        const __m256 av = _mm256_broadcast_ss(
            a + static_cast<std::size_t>(i0 + r) * rs +
            static_cast<std::size_t>(p) * cs);
        lo[r] = _mm256_fmadd_ps(av, b0, lo[r]);
        hi[r] = _mm256_fmadd_ps(av, b1, hi[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      float* crow = c + static_cast<std::size_t>(i0 + r) * n + j;
      if (accumulate) {
        lo[r] = _mm256_add_ps(lo[r], _mm256_loadu_ps(crow));
        hi[r] = _mm256_add_ps(hi[r], _mm256_loadu_ps(crow + 8));
      }
      _mm256_storeu_ps(crow, lo[r]);
      _mm256_storeu_ps(crow + 8, hi[r]);
    }
  }
  for (; j < n; j += 8) {
    const int rem = n - j;
    const bool full = rem >= 8;
    const __m256i mask = full ? _mm256_set1_epi32(-1) : TailMask(rem);
    __m256 acc[R];
    for (int r = 0; r < R; ++r) acc[r] = _mm256_setzero_ps();
    for (int p = 0; p < k; ++p) {
      const float* brow = b + static_cast<std::size_t>(p) * n + j;
      const __m256 bv = _mm256_maskload_ps(brow, mask);
      for (int r = 0; r < R; ++r) {
        const __m256 av = _mm256_broadcast_ss(
            a + static_cast<std::size_t>(i0 + r) * rs +
            static_cast<std::size_t>(p) * cs);
        acc[r] = _mm256_fmadd_ps(av, bv, acc[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      float* crow = c + static_cast<std::size_t>(i0 + r) * n + j;
      if (accumulate) acc[r] = _mm256_add_ps(acc[r], _mm256_maskload_ps(crow, mask));
      _mm256_maskstore_ps(crow, mask, acc[r]);
    }
  }
}

void StridedGemm(int m, int n, int k, const float* a, std::size_t rs,
                 std::size_t cs, const float* b, float* c, bool accumulate) {
  int i = 0;
  for (; i + 4 <= m; i += 4) RowBlock<4>(i, n, k, a, rs, cs, b, c, accumulate);
  for (; i < m; ++i) RowBlock<1>(i, n, k, a, rs, cs, b, c, accumulate);
}

}  // namespace

void GemmNN(int m, int n, int k, const float* a, const float* b, float* c,
            bool accumulate) {
  StridedGemm(m, n, k, a, static_cast<std::size_t>(k), 1, b, c, accumulate);
}

void GemmTN(int m, int n, int k, const float* a, const float* b, float* c,
            bool accumulate) {
  StridedGemm(m, n, k, a, 1, static_cast<std::size_t>(m), b, c, accumulate);
}

void GemmNT(int m, int n, int k, const float* a, const float* b, float* c,
            bool accumulate) {
  const int kfull = k - k % 8;
  const int rem = k - kfull;
  const __m256i mask = rem ? TailMask(rem) : _mm256_setzero_si256();
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const float* b0 = b + static_cast<std::size_t>(j) * k;
      const float* b1 = b0 + k;
      const float* b2 = b1 + k;
      const float* b3 = b2 + k;
      __m256 s0 = _mm256_setzero_ps();
      __m256 s1 = _mm256_setzero_ps();
      __m256 s2 = _mm256_setzero_ps();
      __m256 s3 = _mm256_setzero_ps();
      for (int p = 0; p < kfull; p += 8) {
        const __m256 av = _mm256_loadu_ps(arow + p);
        s0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + p), s0);
        s1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + p), s1);
        s2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + p), s2);
        s3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + p), s3);
      }
      if (rem) {
        const __m256 av = _mm256_maskload_ps(arow + kfull, mask);
        s0 = _mm256_fmadd_ps(av, _mm256_maskload_ps(b0 + kfull, mask), s0);
        s1 = _mm256_fmadd_ps(av, _mm256_maskload_ps(b1 + kfull, mask), s1);
        s2 = _mm256_fmadd_ps(av, _mm256_maskload_ps(b2 + kfull, mask), s2);
        s3 = _mm256_fmadd_ps(av, _mm256_maskload_ps(b3 + kfull, mask), s3);
      }
      float* out = c + static_cast<std::size_t>(i) * n + j;
      const float sums[4] = {HorizontalSum(s0), HorizontalSum(s1),
                             HorizontalSum(s2), HorizontalSum(s3)};
      for (int q = 0; q < 4; ++q) out[q] = accumulate ? out[q] + sums[q] : sums[q];
    }
    for (; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * k;
      __m256 s = _mm256_setzero_ps();
      for (int p = 0; p < kfull; p += 8) {
        s = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p), _mm256_loadu_ps(brow + p), s);
      }
      if (rem) {
        s = _mm256_fmadd_ps(_mm256_maskload_ps(arow + kfull, mask),
                            _mm256_maskload_ps(brow + kfull, mask), s);
      }
      float& out = c[static_cast<std::size_t>(i) * n + j];
      out = accumulate ? out + HorizontalSum(s) : HorizontalSum(s);
    }
  }
}

void MomentumUpdate(std::size_t n, float lr, float momentum, const float* g,
                    float* v, float* w) {
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 vm = _mm256_set1_ps(momentum);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vel = _mm256_add_ps(_mm256_mul_ps(vm, _mm256_loadu_ps(v + i)),
                                     _mm256_loadu_ps(g + i));
    _mm256_storeu_ps(v + i, vel);
    _mm256_storeu_ps(w + i,
                     _mm256_sub_ps(_mm256_loadu_ps(w + i), _mm256_mul_ps(vlr, vel)));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i];
    w[i] = w[i] - lr * v[i];
  }
}

void SquaredDiff(std::size_t n, const float* a, const float* b, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    _mm256_storeu_ps(out + i, _mm256_mul_ps(d, d));
  }
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    out[i] = d * d;
  }
}

void WeightedAccumulate(std::size_t n, const float* w, const float* x,
                        float* acc, float* wsum) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 wv = _mm256_loadu_ps(w + i);
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i),
                                            _mm256_mul_ps(wv, _mm256_loadu_ps(x + i))));
    _mm256_storeu_ps(wsum + i, _mm256_add_ps(_mm256_loadu_ps(wsum + i), wv));
  }
  for (; i < n; ++i) {
    acc[i] += w[i] * x[i];
    wsum[i] += w[i];
  }
}

}  // namespace ethnipipe::kernels::avx2
