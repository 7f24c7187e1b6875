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

#include "curvmia/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "curvmia/digest.h"
#include "curvmia/random.h"

namespace curvmia {

void Dataset::Validate() const {
  if (examples.size() < 2) {
    throw std::invalid_argument("dataset needs at least 2 examples");
  }
  if (d < 1 || k < 1) throw std::invalid_argument("dataset dims must be >= 1");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    if (ex.id != static_cast<int64_t>(i)) {
      throw std::invalid_argument("dataset ids must be dense 0..m-1");
    }
    if (static_cast<int>(ex.x.size()) != d) {
      throw std::invalid_argument("example " + std::to_string(i) +
                                  " has wrong feature count");
    }
    if (ex.y < 0 || ex.y >= k) {
      throw std::invalid_argument("example " + std::to_string(i) +
                                  " label out of range");
    }
    for (double v : ex.x) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("example " + std::to_string(i) +
                                    " has a non-finite feature");
      }
    }
  }
}

std::size_t SubsetMask::Count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
}

SubsetMask SubsetMask::Complement() const {
  SubsetMask out{bits};
  out.bits.flip();
  return out;
}

void TransformSpec::Validate() const {
  if (kind == TransformKind::kGaussianJitter && !(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_jitter needs sigma > 0");
  }
}

std::string TransformSpec::Name() const {
  switch (kind) {
    case TransformKind::kIdentity:
      return "identity";
    case TransformKind::kMirror:
      return "mirror";
    case TransformKind::kGaussianJitter:
      return "gaussian_jitter";
  }
  return "unknown";
}

TransformSpec ParseTransform(const std::string& name, double sigma,
                             uint64_t seed) {
  TransformSpec t;
  if (name == "identity") {
    t.kind = TransformKind::kIdentity;
  } else if (name == "mirror") {
    t.kind = TransformKind::kMirror;
  } else if (name == "gaussian_jitter") {
    t.kind = TransformKind::kGaussianJitter;
    t.sigma = sigma;
  } else {
    throw std::invalid_argument("unknown transform '" + name + "'");
  }
  t.seed = seed;
  t.Validate();
  return t;
}

Dataset GenGaussianMixture(const MixtureSpec& spec) {
  if (spec.classes < 2 || spec.dim < 1 || spec.per_class < 1 ||
      !(spec.noise > 0.0)) {
    throw std::invalid_argument(
        "mixture needs classes >= 2, dim >= 1, per_class >= 1, noise > 0");
  }
  Dataset ds;
  ds.d = spec.dim;
  ds.k = spec.classes;
  ds.seed = spec.seed;
  std::ostringstream name;
  name << "mixture(k=" << spec.classes << ",d=" << spec.dim
       << ",n=" << spec.per_class << ",sep=" << FormatDouble(spec.separation)
       << ",noise=" << FormatDouble(spec.noise) << ")";
  ds.name = name.str();

  std::vector<std::vector<double>> centres(
      static_cast<std::size_t>(spec.classes),
      std::vector<double>(static_cast<std::size_t>(spec.dim), 0.0));
  for (int c = 0; c < spec.classes; ++c) {
    const int axis = c % spec.dim;
    const double sign = ((c / spec.dim) % 2 == 0) ? 1.0 : -1.0;
    const double radius = spec.separation * (1.0 + 0.5 * (c / (2 * spec.dim)));
    centres[static_cast<std::size_t>(c)][static_cast<std::size_t>(axis)] =
        sign * radius;
  }

  Rng rng(spec.seed);
  ds.examples.reserve(static_cast<std::size_t>(spec.classes) * spec.per_class);
  for (int i = 0; i < spec.per_class; ++i) {
    for (int c = 0; c < spec.classes; ++c) {
      Example ex;
      ex.id = static_cast<int64_t>(ds.examples.size());
      ex.y = c;
      ex.x = centres[static_cast<std::size_t>(c)];
      for (double& v : ex.x) v += spec.noise * rng.Normal();
      ds.examples.push_back(std::move(ex));
    }
  }
  return ds;
}

namespace {

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double ParseCell(std::string_view cell, std::size_t line_no) {
  cell = Trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw std::invalid_argument("line " + std::to_string(line_no) +
                                ": non-numeric cell '" + std::string(cell) +
                                "'");
  }
  return v;
}

std::size_t ResolveColumn(int col, std::size_t width, std::size_t line_no) {
  const long resolved = col < 0 ? static_cast<long>(width) + col : col;
  if (resolved < 0 || resolved >= static_cast<long>(width)) {
    throw std::invalid_argument("line " + std::to_string(line_no) +
                                ": column " + std::to_string(col) +
                                " out of range");
  }
  return static_cast<std::size_t>(resolved);
}

}  // namespace

Dataset LoadCsv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Dataset ds;
  ds.name = path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && schema.header) continue;
    if (Trim(line).empty()) continue;
    const auto cells = SplitCommas(line);
    if (width == 0) {
      width = cells.size();
      if (width < 2) {
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": need at least one feature and a label");
      }
    } else if (cells.size() != width) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": ragged row (" +
                                  std::to_string(cells.size()) +
                                  " cells, expected " + std::to_string(width) +
                                  ")");
    }
    const std::size_t label_col =
        ResolveColumn(schema.label_column, width, line_no);
    std::vector<std::size_t> features;
    if (schema.feature_columns.empty()) {
      for (std::size_t c = 0; c < width; ++c) {
        if (c != label_col) features.push_back(c);
      }
    } else {
      for (int c : schema.feature_columns) {
        features.push_back(ResolveColumn(c, width, line_no));
      }
    }
    if (schema.num_features &&
        static_cast<int>(features.size()) != *schema.num_features) {
      throw std::invalid_argument(
          "line " + std::to_string(line_no) + ": ragged row (" +
          std::to_string(features.size()) + " features, schema declares " +
          std::to_string(*schema.num_features) + ")");
    }
    Example ex;
    ex.id = static_cast<int64_t>(ds.examples.size());
    for (std::size_t c : features) ex.x.push_back(ParseCell(cells[c], line_no));
    const double label = ParseCell(cells[label_col], line_no);
    if (label < 0 || label != std::floor(label)) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": label must be a non-negative integer");
    }
    ex.y = static_cast<int>(label);
    if (schema.num_classes && ex.y >= *schema.num_classes) {
      throw std::invalid_argument(
          "line " + std::to_string(line_no) + ": label " +
          std::to_string(ex.y) + " >= declared class count " +
          std::to_string(*schema.num_classes));
    }
    max_label = std::max(max_label, ex.y);
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) {
    throw std::invalid_argument(path.string() + ": no data rows");
  }
  ds.d = static_cast<int>(ds.examples.front().x.size());
  ds.k = schema.num_classes ? *schema.num_classes : max_label + 1;
  ds.Validate();
  return ds;
}

void WriteCsv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const Example& ex : dataset.examples) {
    for (double v : ex.x) out << FormatDouble(v) << ',';
    out << ex.y << '\n';
  }
}

SubsetMask SampleCount(std::size_t m, std::size_t count, uint64_t seed) {
  if (count < 1 || count > m) {
    throw std::invalid_argument("subset size " + std::to_string(count) +
                                " invalid for " + std::to_string(m) +
                                " examples");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(std::span<std::size_t>(order));
  SubsetMask mask{std::vector<bool>(m, false)};
  for (std::size_t i = 0; i < count; ++i) mask.bits[order[i]] = true;
  return mask;
}

SubsetMask SampleSubset(const Dataset& dataset, double fraction,
                        uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fraction must lie in (0, 1]");
  }
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(dataset.size())));
  if (count < 1) {
    throw std::invalid_argument("fraction selects no examples");
  }
  return SampleCount(dataset.size(), count, seed);
}

SubsetMask SelectLowestCurvature(const Dataset& dataset,
                                 std::span<const double> scores,
                                 std::size_t count) {
  const std::size_t m = dataset.size();
  if (scores.size() != m) {
    throw std::invalid_argument("one score per example required");
  }
  if (count > m) {
    throw std::invalid_argument("cannot select " + std::to_string(count) +
                                " of " + std::to_string(m) + " examples");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw std::invalid_argument("NaN curvature score");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return a < b;
  });
  SubsetMask mask{std::vector<bool>(m, false)};
  for (std::size_t i = 0; i < count; ++i) mask.bits[order[i]] = true;
  return mask;
}

Example ApplyTransform(const Example& example, const TransformSpec& t) {
  Example out = example;
  switch (t.kind) {
    case TransformKind::kIdentity:
      break;
    case TransformKind::kMirror:
      std::reverse(out.x.begin(), out.x.end());
      break;
    case TransformKind::kGaussianJitter: {
      t.Validate();
      Rng rng(DeriveSeed(t.seed, static_cast<uint64_t>(example.id),
                         kStreamJitter));
      for (double& v : out.x) v += t.sigma * rng.Normal();
      break;
    }
  }
  return out;
}

Dataset Subset(const Dataset& dataset, const SubsetMask& mask,
               const std::string& name) {
  if (mask.size() != dataset.size()) {
    throw std::invalid_argument("mask length does not match dataset");
  }
  Dataset out;
  out.name = name;
  out.seed = dataset.seed;
  out.d = dataset.d;
  out.k = dataset.k;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!mask.bits[i]) continue;
    Example ex = dataset.examples[i];
    ex.id = static_cast<int64_t>(out.examples.size());
    out.examples.push_back(std::move(ex));
  }
  return out;
}

std::string DatasetDigest(const Dataset& dataset) {
  std::ostringstream os;
  os << dataset.name << '\n' << dataset.seed << '\n';
  for (const Example& ex : dataset.examples) {
    os << ex.id;
    for (double v : ex.x) os << ',' << FormatDouble(v);
    os << ';' << ex.y << '\n';
  }
  return ShortDigest(os.str());
}

}  // namespace curvmia
