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

#include <cstddef>

namespace ethnipipe::kernels::avx2 {

void GemmNN(int m, int n, int k, const float* a, const float* b, float* c,
            bool accumulate);
void GemmTN(int m, int n, int k, const float* a, const float* b, float* c,
            bool accumulate);
void GemmNT(int m, int n, int k, const float* a, const float* b, float* c,
            bool accumulate);
void MomentumUpdate(std::size_t n, float lr, float momentum, const float* g,
                    float* v, float* w);
void SquaredDiff(std::size_t n, const float* a, const float* b, float* out);
void WeightedAccumulate(std::size_t n, const float* w, const float* x,
                        float* acc, float* wsum);

}  // namespace ethnipipe::kernels::avx2
