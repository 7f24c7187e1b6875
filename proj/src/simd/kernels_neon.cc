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

// AArch64 NEON kernels (two float64 lanes). NEON is mandatory on AArch64,
// so no runtime probe is needed.

#include <arm_neon.h>

#include "curvmia/simd/kernels.h"

namespace curvmia::simd {
namespace {

double Dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Gemv(const double* w, const double* x, const double* bias, double* y,
          std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = bias[r] + Dot(w + r * cols, x, cols);
  }
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void GemvT(const double* w, const double* x, double* y, std::size_t rows,
           std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) Axpy(x[r], w + r * cols, y, cols);
}

void Ger(double alpha, const double* x, const double* y, double* w,
         std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    Axpy(alpha * x[r], y, w + r * cols, cols);
  }
}

}  // namespace

const KernelTable* NeonTable() {
  static const KernelTable table{"neon", &Dot, &Gemv, &GemvT, &Ger, &Axpy};
  return &table;
}

}  // namespace curvmia::simd
