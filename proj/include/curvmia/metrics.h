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

#ifndef CURVMIA_METRICS_H_
#define CURVMIA_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace curvmia {

struct RocPoint {
  std::size_t fp = 0;
  std::size_t tp = 0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// Empirical ROC staircase, from (0, 0) to (1, 1). One point per distinct
// score, members predicted for score >= threshold; tied scores move FP and
// TP together in one segment.
struct RocCurve {
  std::vector<RocPoint> points;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

RocCurve ComputeRoc(std::span<const double> member_scores,
                    std::span<const double> nonmember_scores);

// Trapezoidal area, computed from integer counts:
// sum dFP * (TP_a + TP_b) / (2 * n_pos * n_neg). Equals
// P(member > nonmember) + P(tie) / 2 exactly.
double Auroc(const RocCurve& curve);

// max over points of (TPR + 1 - FPR) / 2, evaluated as
// (tp * n_neg + (n_neg - fp) * n_pos) / (2 n_pos n_neg).
double BalancedAccuracy(const RocCurve& curve);

// Largest TPR among points with FPR <= target; no interpolation.
double TprAtFpr(const RocCurve& curve, double fpr_target);

// "1e-3" for 0.001, "%g" otherwise.
std::string FprKey(double fpr);

struct MethodMetrics {
  std::string method;
  double auroc = 0.0;
  double bal_acc = 0.0;
  std::map<std::string, double> tpr_at;
};

MethodMetrics Evaluate(const std::string& method, const RocCurve& curve,
                       std::span<const double> fpr_targets);

// fpr,tpr rows with a header.
void WriteRocCsv(const RocCurve& curve, const std::filesystem::path& path);

}  // namespace curvmia

#endif  // CURVMIA_METRICS_H_
