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

#ifndef CURVMIA_DATA_H_
#define CURVMIA_DATA_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curvmia/nn.h"

namespace curvmia {

// Labelled examples with dense ids 0..m-1 in storage order.
struct Dataset {
  std::string name;
  uint64_t seed = 0;
  int d = 0;
  int k = 0;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  // ids dense, m >= 2, shapes and labels consistent, features finite.
  void Validate() const;
};

struct SubsetMask {
  std::vector<bool> bits;

  std::size_t size() const { return bits.size(); }
  std::size_t Count() const;
  static SubsetMask All(std::size_t m) { return {std::vector<bool>(m, true)}; }
  SubsetMask Complement() const;

  friend bool operator==(const SubsetMask&, const SubsetMask&) = default;
};

// Row j marks the examples model j was trained on.
struct MembershipLedger {
  std::vector<SubsetMask> rows;

  std::size_t num_models() const { return rows.size(); }
  std::size_t num_examples() const {
    return rows.empty() ? 0 : rows.front().size();
  }
  bool In(std::size_t model, std::size_t example) const {
    return rows[model].bits[example];
  }
};

enum class TransformKind { kIdentity, kMirror, kGaussianJitter };

struct TransformSpec {
  TransformKind kind = TransformKind::kIdentity;
  double sigma = 0.0;  // gaussian_jitter only, > 0
  uint64_t seed = 0;

  void Validate() const;
  std::string Name() const;
};
TransformSpec ParseTransform(const std::string& name, double sigma = 0.0,
                             uint64_t seed = 0);

struct MixtureSpec {
  int classes = 2;
  int dim = 2;
  int per_class = 100;
  double separation = 4.0;
  double noise = 1.0;
  uint64_t seed = 0;
};

// Class c is centred at separation * (+/-) e_{c mod dim}; the sign flips
// every dim classes and the radius grows by 1/2 every 2*dim classes, so
// centres stay distinct for any class count. Examples are interleaved by
// class: id = i * classes + c.
Dataset GenGaussianMixture(const MixtureSpec& spec);

struct CsvSchema {
  // Empty: every column except the label.
  std::vector<int> feature_columns;
  // Negative counts from the end; -1 is the last column.
  int label_column = -1;
  bool header = false;
  // When set, labels must be < num_classes and k = num_classes.
  std::optional<int> num_classes;
  // When set, rows must carry exactly this many features.
  std::optional<int> num_features;
};

Dataset LoadCsv(const std::filesystem::path& path, const CsvSchema& schema);
// Features then label, no header, 17 significant digits.
void WriteCsv(const Dataset& dataset, const std::filesystem::path& path);

// Exactly floor(fraction * m) members, uniformly without replacement.
SubsetMask SampleSubset(const Dataset& dataset, double fraction, uint64_t seed);
// Exactly  members out of m.
SubsetMask SampleCount(std::size_t m, std::size_t count, uint64_t seed);

// The count examples with the smallest score; ties go to the lower id.
SubsetMask SelectLowestCurvature(const Dataset& dataset,
                                 std::span<const double> scores,
                                 std::size_t count);

// identity: unchanged. mirror: features reversed. gaussian_jitter: adds
// N(0, sigma^2 I) noise seeded by (t.seed, example.id). Label kept.
Example ApplyTransform(const Example& example, const TransformSpec& t);

// Examples selected by mask, ids re-densified in original order.
Dataset Subset(const Dataset& dataset, const SubsetMask& mask,
               const std::string& name);

// Stable hash over (name, seed, examples).
std::string DatasetDigest(const Dataset& dataset);

}  // namespace curvmia

#endif  // CURVMIA_DATA_H_
