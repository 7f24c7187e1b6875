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

// Reference kernels. Straight loops in index order; the vector variants are
// tested against these.

#include "curvmia/simd/kernels.h"

namespace curvmia::simd::scalar {
namespace {

double Dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Gemv(const double* w, const double* x, const double* bias, double* y,
          std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = bias[r] + Dot(w + r * cols, x, cols);
  }
}

void GemvT(const double* w, const double* x, double* y, std::size_t rows,
           std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = x[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

void Ger(double alpha, const double* x, const double* y, double* w,
         std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double ax = alpha * x[r];
    double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ax * y[c];
  }
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& Table() {
  static const KernelTable table{"scalar", &Dot, &Gemv, &GemvT, &Ger, &Axpy};
  return table;
}

}  // namespace curvmia::simd::scalar
