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

#ifndef CURVMIA_CURVATURE_H_
#define CURVMIA_CURVATURE_H_

// Input loss curvature: the trace of the Hessian of the per-example loss
// with respect to the input vector.
//
// Three estimators share one configuration type:
//   zero_order         loss queries only (four-point central differences
//                      along Rademacher probes)
//   hutchinson_trace   input-gradient differences, v^T H v per probe
//   hutchinson_sq_proxy  same probes, ||H v||^2 (estimates tr(H^2))
//   exact_oracle       full diagonal second difference, probe-free
//
// Signed values are returned as-is; nothing assumes H is PSD.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curvmia/nn.h"

namespace curvmia {

enum class ProbeMode {
  kCoupled,  // u = v: D ~ v^T H v
  kPaired,   // independent u, v: D * (u^T v)
};

enum class CurvatureVariant {
  kZeroOrder,
  kHutchinsonTrace,
  kHutchinsonSqProxy,
  kExactOracle,
};

struct CurvatureConfig {
  double h = 1e-3;
  int n_iter = 10;
  ProbeMode probe_mode = ProbeMode::kCoupled;
  CurvatureVariant variant = CurvatureVariant::kZeroOrder;
  uint64_t seed = 0;

  void Validate() const;
  std::string Canonical() const;
  std::string Digest() const;
};

std::string ToString(ProbeMode mode);
std::string ToString(CurvatureVariant variant);
ProbeMode ParseProbeMode(std::string_view name);
CurvatureVariant ParseCurvatureVariant(std::string_view name);

// Scalar loss at an input, label held fixed.
using LossOracle = std::function<double(std::span<const double>)>;
// Gradient of the loss at an input; writes d entries.
using GradientOracle =
    std::function<void(std::span<const double>, std::span<double>)>;

// [f(x+hv+hu) - f(x-hv+hu) - f(x+hv-hu) + f(x-hv-hu)] / (4h^2), which
// approximates u^T H v (exact for quadratics).
double FourPointEstimate(const LossOracle& f, std::span<const double> x,
                         double h, std::span<const double> u,
                         std::span<const double> v);

// Mean over cfg.n_iter Rademacher probes of the four-point estimate; coupled
// mode uses u = v, paired mode multiplies by u^T v. Both are unbiased for
// tr(H) without a dimension factor since E[v v^T] = I. Probes come from
// Rng(cfg.seed).
double ZoCurvature(const LossOracle& f, std::span<const double> x,
                   const CurvatureConfig& cfg);

struct HutchinsonProbe {
  double quad;     // v^T (H v)
  double sq_norm;  // ||H v||^2
};

// H v ~ (g(x + h v) - g(x)) / h.
HutchinsonProbe HutchinsonProbeEstimate(const GradientOracle& g,
                                        std::span<const double> x, double h,
                                        std::span<const double> v);

// cfg.variant selects the trace (mean v^T H v) or squared proxy
// (mean ||H v||^2).
double HutchinsonCurvature(const GradientOracle& g, std::span<const double> x,
                           const CurvatureConfig& cfg);
double HutchinsonCurvature(const MlpParams& params, const Example& example,
                           const CurvatureConfig& cfg);

// sum_i [f(x + h e_i) - 2 f(x) + f(x - h e_i)] / h^2.
inline constexpr std::size_t kExactOracleMaxDim = 64;
double ExactTraceOracle(const LossOracle& f, std::span<const double> x,
                        double h);

// Seed of the probe generator for one (example, model) query.
uint64_t ProbeSeed(uint64_t cfg_seed, int64_t example_id,
                   std::string_view model_digest);

// Dispatches on cfg.variant with the loss oracle of `params` at the
// example's label, seeding probes from (cfg.seed, example.id, model_digest).
double EstimateCurvature(const MlpParams& params, const Example& example,
                         const CurvatureConfig& cfg,
                         std::string_view model_digest);

// One observation of a per-example statistic under one model.
struct ScoreRecord {
  int64_t example_id = 0;
  std::string model_digest;
  std::string kind;
  double value = 0.0;
  std::string config_digest;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

std::string ScoreRecordToJson(const ScoreRecord& record);
ScoreRecord ScoreRecordFromJson(std::string_view line);
// JSON-lines: one object per line.
void AppendScores(const std::filesystem::path& path,
                  std::span<const ScoreRecord> records);
std::vector<ScoreRecord> ReadScores(const std::filesystem::path& path);

}  // namespace curvmia

#endif  // CURVMIA_CURVATURE_H_
