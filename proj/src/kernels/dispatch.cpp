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

#include <cstdlib>
#include <string>

#include "ethnipipe/error.hpp"
#include "ethnipipe/kernels/kernels.hpp"

#if defined(ETHNIPIPE_HAVE_AVX2)
#include "ethnipipe/kernels/avx2.hpp"
#endif

namespace ethnipipe::kernels {

namespace {

const KernelTable kScalarTable = {
    Isa::kScalar,
    &scalar::GemmNN<float>,
    &scalar::GemmTN<float>,
    &scalar::GemmNT<float>,
    &scalar::MomentumUpdate<float>,
    &scalar::SquaredDiff<float>,
    &scalar::WeightedAccumulate<float>,
};

#if defined(ETHNIPIPE_HAVE_AVX2)
const KernelTable kAvx2Table = {
    Isa::kAvx2,        &avx2::GemmNN,         &avx2::GemmTN,
    &avx2::GemmNT,     &avx2::MomentumUpdate, &avx2::SquaredDiff,
    &avx2::WeightedAccumulate,
};
#endif

const KernelTable* PickAtStartup() {
  if (const char* env = std::getenv("ETHNIPIPE_ISA")) {
    if (std::string(env) == "scalar") return &kScalarTable;
  }
  if (IsaSupported(Isa::kAvx2)) return &Table(Isa::kAvx2);
  return &kScalarTable;
}

const KernelTable*& ActivePointer() {
  static const KernelTable* active = PickAtStartup();
  return active;
}

}  // namespace

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool IsaSupported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(ETHNIPIPE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& Table(Isa isa) {
  if (!IsaSupported(isa)) {
    throw RuntimeFailure("kernel set " + std::string(IsaName(isa)) +
                         " is not supported on this CPU");
  }
#if defined(ETHNIPIPE_HAVE_AVX2)
  if (isa == Isa::kAvx2) return kAvx2Table;
#endif
  return kScalarTable;
}

const KernelTable& Active() { return *ActivePointer(); }

void SetActive(Isa isa) { ActivePointer() = &Table(isa); }

}  // namespace ethnipipe::kernels
