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
#include <numbers>
#include <vector>

#include "curvmia/attack.h"
#include "curvmia/curvature.h"
#include "curvmia/metrics.h"
#include "curvmia/random.h"
#include "test_util.h"

namespace curvmia {
namespace {

TEST(AttackTest, FitTwoPointsAndFloor) {
  const std::vector<double> in = {1.0, 3.0};
  const std::vector<double> out = {5.0, 5.0, 5.0};
  const GaussianPair p = FitGaussianPair(in, out);
  EXPECT_DOUBLE_EQ(p.mu_in, 2.0);
  EXPECT_DOUBLE_EQ(p.sigma_in, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(p.mu_out, 5.0);
  EXPECT_EQ(p.sigma_out, kSigmaFloor);
  EXPECT_EQ(p.n_in, 2);
  EXPECT_EQ(p.n_out, 3);
  EXPECT_THROW(FitGaussianPair(std::vector<double>{1.0}, out), std::invalid_argument);
}

TEST(AttackTest, FitMatchesTextbookFormulaOnRandomSamples) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> in(2 + rng.Below(30)), out(2 + rng.Below(30));
    for (double& v : in) v = 1e6 + rng.Normal();
    for (double& v : out) v = -3.0 + 0.1 * rng.Normal();
    // Independent oracle: long-double sums, then one-pass formula.
    auto stats = [](const std::vector<double>& v) {
      long double s = 0, s2 = 0;
      for (double x : v) s += x;
      const long double m = s / v.size();
      for (double x : v) s2 += (x - m) * (x - m);
      return std::pair<double, double>(m, std::sqrt(s2 / (v.size() - 1)));
    };
    const auto [mi, si] = stats(in);
    const auto [mo, so] = stats(out);
    const GaussianPair p = FitGaussianPair(in, out);
    EXPECT_NEAR(p.mu_in, mi, 1e-9);
    EXPECT_NEAR(p.sigma_in, si, 1e-8 * si);
    EXPECT_NEAR(p.mu_out, mo, 1e-12);
    EXPECT_NEAR(p.sigma_out, so, 1e-10 * so);
  }
}

TEST(AttackTest, PooledSigma) {
  GaussianPair p{0.0, 1.0, 0.0, 3.0, 3, 5};
  EXPECT_DOUBLE_EQ(p.PooledSigma(), std::sqrt((2 * 1.0 + 4 * 9.0) / 6.0));
  const GaussianPair q = p.WithPooledSigma();
  EXPECT_EQ(q.sigma_in, q.sigma_out);
}

TEST(AttackTest, LikelihoodRatioWorkedExample) {
  // mu_in = 1, mu_out = -1, sigma = 1: LR(t) = 2t.
  const GaussianPair p{1.0, 1.0, -1.0, 1.0, 10, 10};
  EXPECT_NEAR(CurvLrScore(1.0, p), 2.0, 1e-15);
  EXPECT_NEAR(CurvLrScore(0.0, p), 0.0, 1e-15);
  EXPECT_NEAR(CurvLrScore(-0.5, p), -1.0, 1e-15);
  EXPECT_NEAR(CurvNllScore(1.0, p), 2.0, 1e-15);
}

TEST(AttackTest, GaussianLogPdfMatchesDirectFormula) {
  for (double x : {-2.0, 0.0, 0.3, 5.0}) {
    const double direct =
        std::log(std::exp(-0.5 * (x - 0.3) * (x - 0.3) / 4.0) / (2.0 * std::sqrt(2 * std::numbers::pi)));
    EXPECT_NEAR(GaussianLogPdf(x, 0.3, 2.0), direct, 1e-14);
  }
}

TEST(AttackTest, ScoresAreAntisymmetricUnderSwap) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const GaussianPair p{rng.Normal(), 0.1 + rng.Uniform(), rng.Normal(), 0.1 + rng.Uniform(), 5, 7};
    const double t = 3.0 * rng.Normal();
    EXPECT_NEAR(CurvLrScore(t, p), -CurvLrScore(t, p.Swapped()), 1e-12);
    EXPECT_NEAR(CurvNllScore(t, p), -CurvNllScore(t, p.Swapped()), 1e-12);
  }
}

TEST(AttackTest, NllOrientation) {
  // Members concentrate near mu_in: a target there scores higher.
  const GaussianPair p{0.0, 0.5, 2.0, 1.5, 8, 8};
  EXPECT_GT(CurvNllScore(0.0, p), CurvNllScore(2.0, p));
  // Per-side sigma: far tails favour the wider OUT side even on the IN side.
  EXPECT_LT(CurvNllScore(-10.0, p), 0.0);
  EXPECT_LT(CurvLrScore(2.0, p), 0.0);
}

TEST(AttackTest, TranslationInvariance) {
  const GaussianPair p{0.2, 0.7, 1.9, 1.3, 6, 6};
  GaussianPair q = p;
  q.mu_in += 100.0;
  q.mu_out += 100.0;
  for (double t : {-1.0, 0.5, 3.0}) {
    EXPECT_NEAR(CurvNllScore(t, p), CurvNllScore(t + 100.0, q), 1e-10);
    EXPECT_NEAR(CurvLrScore(t, p), CurvLrScore(t + 100.0, q), 1e-10);
  }
}

TEST(AttackTest, LrIsMonotoneInTarget) {
  const GaussianPair p{3.0, 1.0, 1.0, 2.0, 6, 6};
  double prev = -HUGE_VAL;
  for (double t = -5.0; t <= 8.0; t += 0.25) {
    const double s = CurvLrScore(t, p);
    EXPECT_GT(s, prev);
    prev = s;
  }
}

TEST(AttackTest, EqualSigmaMakesNllEqualLr) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const GaussianPair p = GaussianPair{rng.Normal(), 0.5 + rng.Uniform(), rng.Normal(),
                                        0.5 + rng.Uniform(), 4, 9}
                               .WithPooledSigma();
    const double t = rng.Normal();
    EXPECT_EQ(CurvNllScore(t, p), CurvLrScore(t, p));
  }
}

TEST(AttackTest, FitGaussianPairsReadsLedger) {
  MembershipLedger ledger;
  ledger.rows = {{{true, false}}, {{true, true}}, {{false, true}}, {{false, false}}};
  ScoreTable t(4, 2);
  // example 0: IN {1, 3}, OUT {10, 12}; example 1: IN {5, 7}, OUT {0, 2}
  t.at(0, 0) = 1;
  t.at(1, 0) = 3;
  t.at(2, 0) = 10;
  t.at(3, 0) = 12;
  t.at(0, 1) = 0;
  t.at(1, 1) = 5;
  t.at(2, 1) = 7;
  t.at(3, 1) = 2;
  const auto pairs = FitGaussianPairs(t, ledger);
  EXPECT_DOUBLE_EQ(pairs[0].mu_in, 2.0);
  EXPECT_DOUBLE_EQ(pairs[0].mu_out, 11.0);
  EXPECT_DOUBLE_EQ(pairs[1].mu_in, 6.0);
  EXPECT_DOUBLE_EQ(pairs[1].mu_out, 1.0);
}

TEST(AttackTest, InsufficientObservationsNamesExamples) {
  MembershipLedger ledger;
  ledger.rows = {{{true, true, false}}, {{true, false, false}}, {{false, true, false}}};
  ScoreTable t(3, 3);
  try {
    FitGaussianPairs(t, ledger);
    FAIL() << "expected InsufficientObservations";
  } catch (const InsufficientObservations& e) {
    EXPECT_EQ(e.example_ids(), (std::vector<int64_t>{0, 1, 2}));
  }
}

TEST(AttackTest, BuildScoreTable) {
  const std::vector<ScoreRecord> recs = {
      {0, "m0", "loss", 1.0, ""}, {1, "m0", "loss", 2.0, ""},
      {0, "m1", "loss", 3.0, ""}, {1, "m1", "loss", 4.0, ""},
      {0, "m1", "curvature", 9.0, ""}, {0, "other", "loss", 7.0, ""},
  };
  const std::vector<std::string> digests = {"m1", "m0"};
  const ScoreTable t = BuildScoreTable(recs, "loss", digests, 2);
  EXPECT_EQ(t.at(0, 0), 3.0);
  EXPECT_EQ(t.at(1, 1), 2.0);
  EXPECT_THROW(BuildScoreTable(recs, "curvature", digests, 2), std::invalid_argument);
}

TEST(AttackTest, BaselineWorkedExamples) {
  BaselineInputs in;
  in.target_loss = 0.5;
  in.in_losses = {0.1, 0.3};
  in.out_losses = {1.0, 2.0, 0.5, 0.2};
  in.target_probs = {0.7, 0.2, 0.1};
  in.label = 0;
  EXPECT_DOUBLE_EQ(BaselineScore(Method::kYeom, in), -0.5);
  EXPECT_DOUBLE_EQ(BaselineScore(Method::kWatsonOffline, in), -0.5 + 0.925);
  EXPECT_DOUBLE_EQ(BaselineScore(Method::kSablayrolles, in), -(0.5 - 4.1 / 6.0));
  // OUT losses below 0.5: {0.2}; tie at 0.5 counts half: quantile 1.5 / 4.
  EXPECT_DOUBLE_EQ(BaselineScore(Method::kYeQuantile, in), 1.0 - 1.5 / 4.0);
  const double mentr = -(0.3 * std::log(0.7)) - 0.2 * std::log(0.8) - 0.1 * std::log(0.9);
  EXPECT_NEAR(ModifiedEntropy(in.target_probs, 0), mentr, 1e-15);
  EXPECT_NEAR(BaselineScore(Method::kSongMentr, in), -mentr, 1e-15);
  EXPECT_THROW(BaselineScore(Method::kLira, in), std::invalid_argument);
  in.logit_pair = GaussianPair{2.0, 1.0, 0.0, 1.0, 4, 4};
  in.target_logit = 1.5;
  EXPECT_NEAR(BaselineScore(Method::kLira, in), 2.0 * 1.5 - 2.0, 1e-14);
  EXPECT_THROW(BaselineScore(Method::kCurvLr, in), std::invalid_argument);
  BaselineInputs empty;
  EXPECT_THROW(BaselineScore(Method::kWatsonOffline, empty), std::invalid_argument);
  EXPECT_THROW(BaselineScore(Method::kYeQuantile, empty), std::invalid_argument);
  EXPECT_THROW(BaselineScore(Method::kSongMentr, empty), std::invalid_argument);
}

TEST(AttackTest, ModifiedEntropyIsZeroForCertainCorrectPrediction) {
  EXPECT_NEAR(ModifiedEntropy(std::vector<double>{1.0, 0.0}, 0), 0.0, 1e-10);
  EXPECT_GT(ModifiedEntropy(std::vector<double>{0.0, 1.0}, 0), 20.0);
  EXPECT_THROW(ModifiedEntropy(std::vector<double>{0.5, 0.5}, 2), std::invalid_argument);
}

TEST(AttackTest, MethodNamesRoundTrip) {
  for (Method m : AllMethods()) EXPECT_EQ(ParseMethod(ToString(m)), m);
  EXPECT_EQ(AllMethods().size(), 8u);
  EXPECT_THROW(ParseMethod("oracle"), std::invalid_argument);
}

TEST(AttackTest, AggregateAugmentedIsMean) {
  EXPECT_DOUBLE_EQ(AggregateAugmented(std::vector<double>{1.0, 2.0, 6.0}), 3.0);
  EXPECT_THROW(AggregateAugmented(std::vector<double>{}), std::invalid_argument);
}

TEST(AttackTest, MirrorAugmentationOfSymmetricNetworkIsNeutral) {
  // Reversing input order of a network whose first layer is reversal
  // symmetric leaves loss and curvature unchanged, so averaging over
  // {identity, mirror} reproduces the identity score.
  MlpParams p = testing::RandomMlp({4, 6, 2}, 12);
  DenseLayer& first = p.layers[0];
  for (int r = 0; r < first.out; ++r) {
    for (int c = 0; c < first.in / 2; ++c) {
      first.w[r * first.in + (first.in - 1 - c)] = first.w[r * first.in + c];
    }
  }
  const Example ex{0, {0.3, -1.0, 0.8, 2.0}, 1};
  const Example mirrored = ApplyTransform(ex, ParseTransform("mirror"));
  const double l0 = ForwardLoss(p, ex).loss;
  const double l1 = ForwardLoss(p, mirrored).loss;
  EXPECT_NEAR(l0, l1, 1e-14);
  LossOracle f = [&](std::span<const double> z) { return Loss(p, z, 1); };
  const double c0 = ExactTraceOracle(f, ex.x, 1e-3);
  const double c1 = ExactTraceOracle(f, mirrored.x, 1e-3);
  EXPECT_NEAR(AggregateAugmented(std::vector<double>{c0, c1}), c0, 1e-8);
}

TEST(AttackTest, AttackRecordsRoundTrip) {
  testing::TempDir dir("attacks");
  const std::vector<AttackRecord> recs = {{0, "yeom", -0.25, true}, {1, "lira", 1e-300, false}};
  WriteAttacks(dir.path() / "a.jsonl", recs);
  const auto back = ReadAttacks(dir.path() / "a.jsonl");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].example_id, recs[i].example_id);
    EXPECT_EQ(back[i].method, recs[i].method);
    EXPECT_EQ(back[i].value, recs[i].value);
    EXPECT_EQ(back[i].is_member_truth, recs[i].is_member_truth);
  }
}

}  // namespace
}  // namespace curvmia
