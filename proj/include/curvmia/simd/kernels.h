// Copyright 2026 The curvmia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CURVMIA_SIMD_KERNELS_H_
#define CURVMIA_SIMD_KERNELS_H_

#include <cstddef>
#include <string_view>

namespace curvmia::simd {

// Dense float64 kernels used by the MLP inner loops. Every variant computes
// the same mathematical result; vector variants may reassociate sums, so
// results agree with the scalar reference to rounding, not bit-for-bit.
//
// Matrices are row-major, `rows x cols`, contiguous.
struct KernelTable {
  const char* name;
  // returns sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = W x + bias   (y has `rows` entries, x has `cols`)
  void (*gemv)(const double* w, const double* x, const double* bias,
               double* y, std::size_t rows, std::size_t cols);
  // y = W^T x        (y has `cols` entries, x has `rows`)
  void (*gemv_t)(const double* w, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
  // W += alpha * x y^T   (x has `rows` entries, y has `cols`)
  void (*ger)(double alpha, const double* x, const double* y, double* w,
              std::size_t rows, std::size_t cols);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

namespace scalar {
const KernelTable& Table();
}  // namespace scalar

// Returns nullptr when the variant is not compiled in or the CPU lacks the
// instruction set.
const KernelTable* Avx2Table();
const KernelTable* NeonTable();

// The table used by the library. Chosen once: the best supported variant,
// unless the CURVMIA_SIMD environment variable names one of "scalar",
// "avx2", "neon".
const KernelTable& Active();

// Overrides the active table (tests and benchmarks). Returns false if the
// named variant is unavailable on this machine.
bool SelectVariant(std::string_view name);

}  // namespace curvmia::simd

#endif  // CURVMIA_SIMD_KERNELS_H_
