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
#include <vector>

#include "curvmia/nn.h"
#include "curvmia/simd/kernels.h"
#include "test_util.h"

namespace curvmia {
namespace {

using testing::RandomMlp;
using testing::RandomVector;
using testing::ReferenceLoss;

// |a - b| within rel * max(|a|, |b|, floor).
::testing::AssertionResult CloseRel(double a, double b, double rel,
                                    double floor) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  if (std::abs(a - b) <= rel * scale) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure()
         << a << " vs " << b << " (diff " << std::abs(a - b) << ")";
}

TEST(NnTest, ZeroWeightsGiveUniformSoftmax) {
  MlpParams p = InitMlp(LayerSizes{{3, 5, 4}}, 1);
  for (DenseLayer& l : p.layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
  }
  const ForwardResult r = ForwardLoss(p, Example{0, {0.3, -2.0, 5.0}, 2});
  EXPECT_NEAR(r.loss, std::log(4.0), 1e-15);
  for (double q : r.probs) EXPECT_NEAR(q, 0.25, 1e-15);
}

TEST(NnTest, InitIsDeterministicAndBounded) {
  const LayerSizes arch{{4, 16, 3}};
  EXPECT_EQ(InitMlp(arch, 9), InitMlp(arch, 9));
  EXPECT_NE(InitMlp(arch, 9).layers[0].w, InitMlp(arch, 10).layers[0].w);
  const MlpParams p = InitMlp(arch, 9);
  for (const DenseLayer& l : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (double w : l.w) EXPECT_LE(std::abs(w), bound);
    for (double b : l.b) EXPECT_EQ(b, 0.0);
  }
}

TEST(NnTest, ForwardMatchesLongDoubleReference) {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const std::vector<int> sizes = {5, 7, 6, 4};
    const MlpParams p = RandomMlp(sizes, seed);
    const Example ex{0, RandomVector(5, seed + 1000), static_cast<int>(seed % 4)};
    std::vector<long double> ref_probs;
    const long double ref = ReferenceLoss(p, ex.x, ex.y, &ref_probs);
    const ForwardResult r = ForwardLoss(p, ex);
    EXPECT_NEAR(r.loss, static_cast<double>(ref), 1e-10 * (1.0 + std::abs(r.loss)));
    for (std::size_t i = 0; i < r.probs.size(); ++i) {
      EXPECT_NEAR(r.probs[i], static_cast<double>(ref_probs[i]), 1e-12);
    }
    EXPECT_EQ(Loss(p, ex.x, ex.y), r.loss);
  }
}

TEST(NnTest, ScalarAndVectorKernelsAgreeOnLoss) {
  const MlpParams p = RandomMlp({9, 33, 3}, 4);
  const Example ex{0, RandomVector(9, 5), 1};
  const std::string before = simd::Active().name;
  ASSERT_TRUE(simd::SelectVariant("scalar"));
  const double a = ForwardLoss(p, ex).loss;
  ASSERT_TRUE(simd::SelectVariant(before));
  const double b = ForwardLoss(p, ex).loss;
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(NnTest, GradInputMatchesCentralDifferences) {
  const double delta = 1e-5;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const MlpParams p = RandomMlp({4, 8, 3}, seed);
    const auto x = RandomVector(4, seed + 77);
    const int y = static_cast<int>(seed % 3);
    const auto g = GradInput(p, x, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto xp = x, xm = x;
      xp[i] += delta;
      xm[i] -= delta;
      const double fd = (Loss(p, xp, y) - Loss(p, xm, y)) / (2 * delta);
      EXPECT_TRUE(CloseRel(g[i], fd, 1e-4, 1e-2)) << "seed " << seed << " i " << i;
    }
  }
}

TEST(NnTest, GradParamsMatchesCentralDifferences) {
  const double delta = 1e-5;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    MlpParams p = RandomMlp({3, 5, 4, 2}, seed);
    std::vector<Example> batch;
    for (int i = 0; i < 3; ++i) {
      batch.push_back({i, RandomVector(3, seed * 10 + i), i % 2});
    }
    auto mean_loss = [&](const MlpParams& q) {
      double s = 0.0;
      for (const Example& e : batch) s += Loss(q, e.x, e.y);
      return s / static_cast<double>(batch.size());
    };
    const MlpGradient g = GradParams(p, batch);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      for (std::size_t k = 0; k < p.layers[l].w.size(); ++k) {
        const double w0 = p.layers[l].w[k];
        p.layers[l].w[k] = w0 + delta;
        const double fp = mean_loss(p);
        p.layers[l].w[k] = w0 - delta;
        const double fm = mean_loss(p);
        p.layers[l].w[k] = w0;
        EXPECT_TRUE(CloseRel(g.layers[l].w[k], (fp - fm) / (2 * delta), 1e-4, 1e-2));
      }
      for (std::size_t k = 0; k < p.layers[l].b.size(); ++k) {
        const double b0 = p.layers[l].b[k];
        p.layers[l].b[k] = b0 + delta;
        const double fp = mean_loss(p);
        p.layers[l].b[k] = b0 - delta;
        const double fm = mean_loss(p);
        p.layers[l].b[k] = b0;
        EXPECT_TRUE(CloseRel(g.layers[l].b[k], (fp - fm) / (2 * delta), 1e-4, 1e-2));
      }
    }
  }
}

TEST(NnTest, DuplicatedBatchHasSameMeanGradient) {
  const MlpParams p = RandomMlp({3, 6, 2}, 2);
  const Example e{0, {0.5, -1.0, 2.0}, 1};
  const std::vector<Example> one = {e};
  const std::vector<Example> two = {e, e};
  const MlpGradient a = GradParams(p, one);
  const MlpGradient b = GradParams(p, two);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t k = 0; k < a.layers[l].w.size(); ++k) {
      EXPECT_NEAR(a.layers[l].w[k], b.layers[l].w[k], 1e-15);
    }
  }
}

TEST(NnTest, ZeroInputGivesZeroFirstLayerWeightGradient) {
  const MlpParams p = RandomMlp({4, 5, 3}, 8);
  const std::vector<Example> batch = {{0, {0, 0, 0, 0}, 2}};
  const MlpGradient g = GradParams(p, batch);
  for (double v : g.layers[0].w) EXPECT_EQ(v, 0.0);
  bool any_bias = false;
  for (double v : g.layers[0].b) any_bias |= v != 0.0;
  EXPECT_TRUE(any_bias);
}

TEST(NnTest, LossIsClampedAndGradientVanishes) {
  MlpParams p = InitMlp(LayerSizes{{2, 2}}, 0);
  p.layers[0].w = {0, 0, 0, 0};
  p.layers[0].b = {100.0, -100.0};
  const Example wrong{0, {1.0, 1.0}, 1};
  EXPECT_DOUBLE_EQ(ForwardLoss(p, wrong).loss, -std::log(kProbClip));
  for (double g : GradInput(p, wrong)) EXPECT_EQ(g, 0.0);
  const Example right{0, {1.0, 1.0}, 0};
  EXPECT_LT(ForwardLoss(p, right).loss, 1e-80);
}

TEST(NnTest, ScaledLogit) {
  EXPECT_DOUBLE_EQ(ScaledLogitFromProb(0.5), 0.0);
  EXPECT_NEAR(ScaledLogitFromProb(0.9), std::log(9.0), 1e-14);
  EXPECT_TRUE(std::isfinite(ScaledLogitFromProb(1.0)));
  EXPECT_TRUE(std::isfinite(ScaledLogitFromProb(0.0)));
}

TEST(NnTest, RejectsBadShapes) {
  const MlpParams p = InitMlp(LayerSizes{{3, 4, 2}}, 1);
  EXPECT_THROW(ForwardLoss(p, Example{0, {1.0, 2.0}, 0}), std::invalid_argument);
  EXPECT_THROW(ForwardLoss(p, Example{0, {1.0, 2.0, 3.0}, 2}), std::invalid_argument);
  EXPECT_THROW(InitMlp(LayerSizes{{3}}, 1), std::invalid_argument);
  EXPECT_THROW(InitMlp(LayerSizes{{3, 0, 2}}, 1), std::invalid_argument);
  MlpParams broken = p;
  broken.layers[1].w.pop_back();
  EXPECT_THROW(ValidateParams(broken), std::invalid_argument);
  broken = p;
  broken.layers[0].b[0] = NAN;
  EXPECT_THROW(ValidateParams(broken), std::invalid_argument);
}

TEST(NnTest, JsonRoundTripIsExact) {
  MlpParams p = RandomMlp({4, 8, 3}, 21);
  p.config_digest = "abc123";
  const std::string text = MlpToJson(p);
  const MlpParams q = MlpFromJson(text);
  EXPECT_EQ(p, q);
  EXPECT_EQ(ModelDigest(p), ModelDigest(q));
  EXPECT_EQ(MlpToJson(q), text);
  MlpParams r = q;
  r.layers[0].w[0] = std::nextafter(r.layers[0].w[0], 2.0);
  EXPECT_NE(ModelDigest(r), ModelDigest(p));
}

TEST(NnTest, JsonRejectsMalformed) {
  EXPECT_ANY_THROW(MlpFromJson("{}"));
  EXPECT_ANY_THROW(MlpFromJson("not json"));
}

}  // namespace
}  // namespace curvmia
