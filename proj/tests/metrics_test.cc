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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "curvmia/metrics.h"
#include "curvmia/random.h"
#include "test_util.h"

namespace curvmia {
namespace {

double PairCountAuroc(const std::vector<double>& pos, const std::vector<double>& neg) {
  long long twice = 0;
  for (double a : pos) {
    for (double b : neg) twice += a > b ? 2 : (a == b ? 1 : 0);
  }
  return static_cast<double>(twice) /
         (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

TEST(MetricsTest, WorkedExampleWithTie) {
  const std::vector<double> pos = {3.0, 2.0};
  const std::vector<double> neg = {1.0, 2.0};
  const RocCurve c = ComputeRoc(pos, neg);
  EXPECT_DOUBLE_EQ(Auroc(c), 7.0 / 8.0);
  // Threshold above 2: tp 1, fp 0 -> (1/2 + 1) / 2.
  EXPECT_DOUBLE_EQ(BalancedAccuracy(c), 0.75);
  EXPECT_DOUBLE_EQ(TprAtFpr(c, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(TprAtFpr(c, 0.49), 0.5);
  EXPECT_DOUBLE_EQ(TprAtFpr(c, 0.5), 1.0);
}

TEST(MetricsTest, ExtremeCurves) {
  const std::vector<double> hi = {5, 6, 7};
  const std::vector<double> lo = {1, 2};
  EXPECT_EQ(Auroc(ComputeRoc(hi, lo)), 1.0);
  EXPECT_EQ(BalancedAccuracy(ComputeRoc(hi, lo)), 1.0);
  EXPECT_EQ(Auroc(ComputeRoc(lo, hi)), 0.0);
  EXPECT_EQ(BalancedAccuracy(ComputeRoc(lo, hi)), 0.5);
  const std::vector<double> same = {1, 1, 1};
  EXPECT_EQ(Auroc(ComputeRoc(same, same)), 0.5);
  EXPECT_EQ(TprAtFpr(ComputeRoc(same, same), 0.5), 0.0);
}

TEST(MetricsTest, StaircaseEndpoints) {
  const RocCurve c = ComputeRoc(std::vector<double>{0.4, 0.9}, std::vector<double>{0.1, 0.5, 0.95});
  EXPECT_EQ(c.points.front().fpr, 0.0);
  EXPECT_EQ(c.points.front().tpr, 0.0);
  EXPECT_EQ(c.points.back().fpr, 1.0);
  EXPECT_EQ(c.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].fp, c.points[i - 1].fp);
    EXPECT_GE(c.points[i].tp, c.points[i - 1].tp);
  }
}

TEST(MetricsTest, MatchesPairCountingOnRandomSets) {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> pos(1 + rng.Below(60)), neg(1 + rng.Below(60));
    // Coarse grid so ties are common.
    for (double& v : pos) v = static_cast<double>(rng.Below(12));
    for (double& v : neg) v = static_cast<double>(rng.Below(10));
    EXPECT_EQ(Auroc(ComputeRoc(pos, neg)), PairCountAuroc(pos, neg));
  }
}

TEST(MetricsTest, InvariantUnderMonotoneTransform) {
  Rng rng(8);
  std::vector<double> pos(40), neg(50);
  for (double& v : pos) v = rng.Normal() + 0.5;
  for (double& v : neg) v = rng.Normal();
  std::vector<double> pos2 = pos, neg2 = neg;
  for (double& v : pos2) v = std::exp(v);
  for (double& v : neg2) v = std::exp(v);
  EXPECT_EQ(Auroc(ComputeRoc(pos, neg)), Auroc(ComputeRoc(pos2, neg2)));
  // Swapping roles mirrors the AUROC.
  EXPECT_NEAR(Auroc(ComputeRoc(neg, pos)), 1.0 - Auroc(ComputeRoc(pos, neg)), 1e-15);
}

TEST(MetricsTest, RejectsBadInput) {
  const std::vector<double> one = {1.0};
  EXPECT_THROW(ComputeRoc(std::vector<double>{}, one), std::invalid_argument);
  EXPECT_THROW(ComputeRoc(one, std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(ComputeRoc(std::vector<double>{NAN}, one), std::invalid_argument);
  EXPECT_THROW(TprAtFpr(ComputeRoc(one, one), 1.5), std::invalid_argument);
}

TEST(MetricsTest, FprKeys) {
  EXPECT_EQ(FprKey(0.1), "1e-1");
  EXPECT_EQ(FprKey(0.01), "1e-2");
  EXPECT_EQ(FprKey(0.001), "1e-3");
  EXPECT_EQ(FprKey(0.05), "0.05");
}

TEST(MetricsTest, EvaluateAndCsv) {
  testing::TempDir dir("roc");
  const RocCurve c = ComputeRoc(std::vector<double>{3.0, 2.0}, std::vector<double>{1.0, 2.0});
  const std::vector<double> targets = {0.1, 0.5};
  const MethodMetrics m = Evaluate("x", c, targets);
  EXPECT_EQ(m.method, "x");
  EXPECT_DOUBLE_EQ(m.auroc, 7.0 / 8.0);
  EXPECT_EQ(m.tpr_at.at("1e-1"), 0.5);
  EXPECT_EQ(m.tpr_at.at("0.5"), 1.0);
  WriteRocCsv(c, dir.path() / "roc.csv");
  std::ifstream in(dir.path() / "roc.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "fpr,tpr\n0,0\n0,0.5\n0.5,1\n1,1\n");
}

}  // namespace
}  // namespace curvmia
