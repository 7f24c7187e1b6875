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

#include "curvmia/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "curvmia/digest.h"

namespace curvmia {

RocCurve ComputeRoc(std::span<const double> member_scores,
                    std::span<const double> nonmember_scores) {
  if (member_scores.empty() || nonmember_scores.empty()) {
    throw std::invalid_argument("ROC needs at least one member and one "
                                "nonmember score");
  }
  struct Scored {
    double score;
    bool member;
  };
  std::vector<Scored> all;
  all.reserve(member_scores.size() + nonmember_scores.size());
  for (double s : member_scores) all.push_back({s, true});
  for (double s : nonmember_scores) all.push_back({s, false});
  for (const Scored& s : all) {
    if (!std::isfinite(s.score)) {
      throw std::invalid_argument("ROC scores must be finite");
    }
  }
  std::sort(all.begin(), all.end(),
            [](const Scored& a, const Scored& b) { return a.score > b.score; });

  RocCurve curve;
  curve.n_pos = member_scores.size();
  curve.n_neg = nonmember_scores.size();
  const auto p = static_cast<double>(curve.n_pos);
  const auto n = static_cast<double>(curve.n_neg);
  curve.points.push_back({0, 0, 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double threshold = all[i].score;
    for (; i < all.size() && all[i].score == threshold; ++i) {
      (all[i].member ? tp : fp) += 1;
    }
    curve.points.push_back(
        {fp, tp, static_cast<double>(fp) / n, static_cast<double>(tp) / p});
  }
  return curve;
}

double Auroc(const RocCurve& curve) {
  // Twice the area in units of one (member, nonmember) pair.
  double twice_pairs = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    twice_pairs += static_cast<double>(b.fp - a.fp) *
                   static_cast<double>(a.tp + b.tp);
  }
  return twice_pairs / (2.0 * static_cast<double>(curve.n_pos) *
                        static_cast<double>(curve.n_neg));
}

double BalancedAccuracy(const RocCurve& curve) {
  const auto p = static_cast<double>(curve.n_pos);
  const auto n = static_cast<double>(curve.n_neg);
  double best = 0.0;
  for (const RocPoint& pt : curve.points) {
    const double num = static_cast<double>(pt.tp) * n +
                       static_cast<double>(curve.n_neg - pt.fp) * p;
    best = std::max(best, num);
  }
  return best / (2.0 * p * n);
}

double TprAtFpr(const RocCurve& curve, double fpr_target) {
  if (!(fpr_target >= 0.0 && fpr_target <= 1.0)) {
    throw std::invalid_argument("FPR target must lie in [0, 1]");
  }
  double best = 0.0;
  for (const RocPoint& pt : curve.points) {
    if (pt.fpr <= fpr_target) best = std::max(best, pt.tpr);
  }
  return best;
}

std::string FprKey(double fpr) {
  if (fpr > 0.0) {
    const double e = std::log10(fpr);
    const double r = std::round(e);
    if (std::abs(e - r) < 1e-12) {
      return "1e" + std::to_string(static_cast<int>(r));
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", fpr);
  return buf;
}

MethodMetrics Evaluate(const std::string& method, const RocCurve& curve,
                       std::span<const double> fpr_targets) {
  MethodMetrics m;
  m.method = method;
  m.auroc = Auroc(curve);
  m.bal_acc = BalancedAccuracy(curve);
  for (double t : fpr_targets) m.tpr_at[FprKey(t)] = TprAtFpr(curve, t);
  return m;
}

void WriteRocCsv(const RocCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "fpr,tpr\n";
  for (const RocPoint& pt : curve.points) {
    out << FormatDouble(pt.fpr) << ',' << FormatDouble(pt.tpr) << '\n';
  }
}

}  // namespace curvmia
