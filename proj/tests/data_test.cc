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
#include <limits>
#include <vector>

#include "curvmia/data.h"
#include "curvmia/random.h"
#include "test_util.h"

namespace curvmia {
namespace {

void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

TEST(DataTest, MixtureShapeAndDeterminism) {
  MixtureSpec spec{3, 4, 10, 4.0, 1.0, 17};
  const Dataset a = GenGaussianMixture(spec);
  const Dataset b = GenGaussianMixture(spec);
  ASSERT_EQ(a.size(), 30u);
  EXPECT_EQ(a.d, 4);
  EXPECT_EQ(a.k, 3);
  EXPECT_NO_THROW(a.Validate());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.examples[i].id, static_cast<int64_t>(i));
    EXPECT_EQ(a.examples[i].y, static_cast<int>(i % 3));
    EXPECT_EQ(a.examples[i], b.examples[i]);
  }
  EXPECT_EQ(DatasetDigest(a), DatasetDigest(b));
  spec.seed = 18;
  EXPECT_NE(DatasetDigest(GenGaussianMixture(spec)), DatasetDigest(a));
}

TEST(DataTest, MixtureClassMeansNearCentres) {
  const Dataset ds = GenGaussianMixture({2, 3, 4000, 2.0, 1.0, 5});
  std::vector<std::vector<double>> mean(2, std::vector<double>(3, 0.0));
  for (const Example& ex : ds.examples) {
    for (int j = 0; j < 3; ++j) mean[ex.y][j] += ex.x[j] / 4000.0;
  }
  // Class c sits at +separation on axis c.
  EXPECT_NEAR(mean[0][0], 2.0, 0.06);
  EXPECT_NEAR(mean[0][1], 0.0, 0.06);
  EXPECT_NEAR(mean[1][1], 2.0, 0.06);
  EXPECT_NEAR(mean[1][0], 0.0, 0.06);
}

TEST(DataTest, WellSeparatedMixtureIsNearestCentroidSeparable) {
  const Dataset ds = GenGaussianMixture({4, 4, 50, 10.0, 0.5, 3});
  std::vector<std::vector<double>> centre(4, std::vector<double>(4, 0.0));
  for (const Example& ex : ds.examples) {
    for (int j = 0; j < 4; ++j) centre[ex.y][j] += ex.x[j] / 50.0;
  }
  for (const Example& ex : ds.examples) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 4; ++c) {
      double d = 0.0;
      for (int j = 0; j < 4; ++j) d += (ex.x[j] - centre[c][j]) * (ex.x[j] - centre[c][j]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    EXPECT_EQ(best, ex.y);
  }
}

TEST(DataTest, MoreClassesThanDimensionsStillDistinctCentres) {
  const Dataset ds = GenGaussianMixture({5, 2, 1, 3.0, 1e-9, 1});
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      EXPECT_NE(ds.examples[a].x, ds.examples[b].x);
    }
  }
}

TEST(DataTest, MixtureRejectsBadSpec) {
  EXPECT_THROW(GenGaussianMixture({1, 2, 10, 1.0, 1.0, 0}), std::invalid_argument);
  EXPECT_THROW(GenGaussianMixture({2, 2, 10, 1.0, 0.0, 0}), std::invalid_argument);
}

TEST(DataTest, SampleSubsetCountAndFrequency) {
  const Dataset ds = GenGaussianMixture({2, 2, 50, 1.0, 1.0, 0});
  std::vector<int> hits(ds.size(), 0);
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    const SubsetMask m = SampleSubset(ds, 0.5, DeriveSeed(9, seed, 1));
    ASSERT_EQ(m.Count(), 50u);
    for (std::size_t i = 0; i < m.size(); ++i) hits[i] += m.bits[i];
  }
  for (int h : hits) {
    EXPECT_GE(h, 450);
    EXPECT_LE(h, 550);
  }
  EXPECT_EQ(SampleSubset(ds, 0.333, 1).Count(), 33u);
  EXPECT_EQ(SampleSubset(ds, 1.0, 1).Count(), 100u);
  EXPECT_EQ(SampleSubset(ds, 0.5, 4), SampleSubset(ds, 0.5, 4));
  EXPECT_THROW(SampleSubset(ds, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(SampleSubset(ds, 1.5, 1), std::invalid_argument);
  EXPECT_THROW(SampleSubset(ds, 0.001, 1), std::invalid_argument);
}

TEST(DataTest, ComplementPartitions) {
  const SubsetMask m = SampleCount(20, 7, 3);
  const SubsetMask c = m.Complement();
  EXPECT_EQ(c.Count(), 13u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NE(m.bits[i], c.bits[i]);
}

TEST(DataTest, SelectLowestCurvature) {
  const Dataset ds = GenGaussianMixture({2, 2, 3, 1.0, 1.0, 0});
  const std::vector<double> scores = {5.0, -1.0, 2.0, 2.0, 0.0, 9.0};
  const SubsetMask m = SelectLowestCurvature(ds, scores, 3);
  // -1 (id 1), 0 (id 4), then the tie at 2.0 goes to the lower id 2.
  EXPECT_EQ(m.bits, (std::vector<bool>{false, true, true, false, true, false}));
  std::vector<double> bad = scores;
  bad[3] = NAN;
  EXPECT_THROW(SelectLowestCurvature(ds, bad, 3), std::invalid_argument);
  EXPECT_THROW(SelectLowestCurvature(ds, scores, 7), std::invalid_argument);
  EXPECT_THROW(SelectLowestCurvature(ds, std::vector<double>{1.0}, 1),
               std::invalid_argument);
}

TEST(DataTest, SubsetRedensifiesIds) {
  const Dataset ds = GenGaussianMixture({2, 2, 5, 1.0, 1.0, 0});
  const SubsetMask m = SampleCount(10, 4, 2);
  const Dataset sub = Subset(ds, m, "sub");
  ASSERT_EQ(sub.size(), 4u);
  EXPECT_NO_THROW(sub.Validate());
  std::size_t j = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!m.bits[i]) continue;
    EXPECT_EQ(sub.examples[j].id, static_cast<int64_t>(j));
    EXPECT_EQ(sub.examples[j].x, ds.examples[i].x);
    ++j;
  }
}

TEST(DataTest, Transforms) {
  const Example ex{3, {1.0, 2.0, 3.0}, 1};
  EXPECT_EQ(ApplyTransform(ex, ParseTransform("identity")), ex);
  EXPECT_EQ(ApplyTransform(ex, ParseTransform("mirror")).x,
            (std::vector<double>{3.0, 2.0, 1.0}));
  const TransformSpec j = ParseTransform("gaussian_jitter", 0.1, 5);
  const Example a = ApplyTransform(ex, j);
  EXPECT_EQ(a, ApplyTransform(ex, j));
  EXPECT_EQ(a.y, 1);
  EXPECT_NE(a.x, ex.x);
  Example other = ex;
  other.id = 4;
  EXPECT_NE(ApplyTransform(other, j).x, a.x);
  EXPECT_THROW(ParseTransform("gaussian_jitter", 0.0), std::invalid_argument);
  EXPECT_THROW(ParseTransform("rotate"), std::invalid_argument);
}

TEST(DataTest, CsvRoundTrip) {
  testing::TempDir dir("csv");
  const Dataset ds = GenGaussianMixture({3, 4, 5, 2.0, 1.0, 8});
  WriteCsv(ds, dir.path() / "d.csv");
  const Dataset back = LoadCsv(dir.path() / "d.csv", CsvSchema{});
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.d, 4);
  EXPECT_EQ(back.k, 3);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.examples[i], ds.examples[i]);
}

TEST(DataTest, CsvSchemaColumns) {
  testing::TempDir dir("csv");
  WriteFile(dir.path() / "h.csv", "label,a,b\n1,0.5,2\n0,1.5,-3\n");
  CsvSchema s;
  s.header = true;
  s.label_column = 0;
  const Dataset ds = LoadCsv(dir.path() / "h.csv", s);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.examples[0].x, (std::vector<double>{0.5, 2.0}));
  EXPECT_EQ(ds.examples[0].y, 1);
  s.feature_columns = {2};
  EXPECT_EQ(LoadCsv(dir.path() / "h.csv", s).examples[1].x, (std::vector<double>{-3.0}));
}

TEST(DataTest, CsvErrors) {
  testing::TempDir dir("csv");
  EXPECT_THROW(LoadCsv(dir.path() / "missing.csv", CsvSchema{}), std::runtime_error);
  WriteFile(dir.path() / "ragged.csv", "1,2,0\n1,0\n");
  EXPECT_THROW(LoadCsv(dir.path() / "ragged.csv", CsvSchema{}), std::invalid_argument);
  WriteFile(dir.path() / "text.csv", "1,abc,0\n");
  EXPECT_THROW(LoadCsv(dir.path() / "text.csv", CsvSchema{}), std::invalid_argument);
  WriteFile(dir.path() / "label.csv", "1,2,3\n1,2,0\n");
  CsvSchema k2;
  k2.num_classes = 2;
  EXPECT_THROW(LoadCsv(dir.path() / "label.csv", k2), std::invalid_argument);
  WriteFile(dir.path() / "frac.csv", "1,2,0.5\n1,2,0\n");
  EXPECT_THROW(LoadCsv(dir.path() / "frac.csv", CsvSchema{}), std::invalid_argument);
  WriteFile(dir.path() / "empty.csv", "a,b,label\n");
  CsvSchema h;
  h.header = true;
  EXPECT_THROW(LoadCsv(dir.path() / "empty.csv", h), std::invalid_argument);
  WriteFile(dir.path() / "nf.csv", "1,2,0\n1,2,1\n");
  CsvSchema nf;
  nf.num_features = 3;
  EXPECT_THROW(LoadCsv(dir.path() / "nf.csv", nf), std::invalid_argument);
}

}  // namespace
}  // namespace curvmia
