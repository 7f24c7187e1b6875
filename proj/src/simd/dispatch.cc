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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "curvmia/simd/kernels.h"

namespace curvmia::simd {

#if !defined(CURVMIA_HAVE_AVX2)
const KernelTable* Avx2Table() { return nullptr; }
#endif
#if !defined(CURVMIA_HAVE_NEON)
const KernelTable* NeonTable() { return nullptr; }
#endif

namespace {

const KernelTable* Lookup(std::string_view name) {
  if (name == "scalar") return &scalar::Table();
  if (name == "avx2") return Avx2Table();
  if (name == "neon") return NeonTable();
  return nullptr;
}

const KernelTable* Detect() {
  if (const char* env = std::getenv("CURVMIA_SIMD")) {
    if (const KernelTable* t = Lookup(env)) return t;
  }
  if (const KernelTable* t = Avx2Table()) return t;
  if (const KernelTable* t = NeonTable()) return t;
  return &scalar::Table();
}

std::atomic<const KernelTable*>& Slot() {
  static std::atomic<const KernelTable*> slot{Detect()};
  return slot;
}

}  // namespace

const KernelTable& Active() {
  return *Slot().load(std::memory_order_acquire);
}

bool SelectVariant(std::string_view name) {
  const KernelTable* t = Lookup(name);
  if (t == nullptr) return false;
  Slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace curvmia::simd
