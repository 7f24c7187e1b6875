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

#include "curvmia/attack.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "curvmia/nn.h"
#include "json.hpp"

namespace curvmia {
namespace {

double Mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

// Two-pass unbiased standard deviation.
double SampleStd(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double GaussianPair::PooledSigma() const {
  // Equal sides pool to themselves; skip the arithmetic so the result is exact.
  if (sigma_in == sigma_out) return std::max(sigma_in, kSigmaFloor);
  const double num = (n_in - 1) * sigma_in * sigma_in +
                     (n_out - 1) * sigma_out * sigma_out;
  const double den = static_cast<double>(n_in + n_out - 2);
  if (den <= 0.0) return std::max(std::max(sigma_in, sigma_out), kSigmaFloor);
  return std::max(std::sqrt(num / den), kSigmaFloor);
}

GaussianPair GaussianPair::WithPooledSigma() const {
  GaussianPair p = *this;
  p.sigma_in = p.sigma_out = PooledSigma();
  return p;
}

GaussianPair GaussianPair::Swapped() const {
  return {mu_out, sigma_out, mu_in, sigma_in, n_out, n_in};
}

GaussianPair FitGaussianPair(std::span<const double> in,
                             std::span<const double> out) {
  if (in.size() < 2 || out.size() < 2) {
    throw std::invalid_argument(
        "need at least 2 IN and 2 OUT observations to fit");
  }
  GaussianPair p;
  p.n_in = static_cast<int>(in.size());
  p.n_out = static_cast<int>(out.size());
  p.mu_in = Mean(in);
  p.mu_out = Mean(out);
  p.sigma_in = std::max(SampleStd(in, p.mu_in), kSigmaFloor);
  p.sigma_out = std::max(SampleStd(out, p.mu_out), kSigmaFloor);
  return p;
}

ScoreTable BuildScoreTable(std::span<const ScoreRecord> records,
                           std::string_view kind,
                           std::span<const std::string> model_digests,
                           std::size_t n_examples) {
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t j = 0; j < model_digests.size(); ++j) {
    row_of.emplace(model_digests[j], j);
  }
  ScoreTable table(model_digests.size(), n_examples);
  std::vector<bool> seen(table.values.size(), false);
  for (const ScoreRecord& r : records) {
    if (r.kind != kind) continue;
    const auto it = row_of.find(r.model_digest);
    if (it == row_of.end()) continue;
    if (r.example_id < 0 || static_cast<std::size_t>(r.example_id) >= n_examples) {
      throw std::invalid_argument("score record example id out of range");
    }
    const std::size_t cell =
        it->second * n_examples + static_cast<std::size_t>(r.example_id);
    table.values[cell] = r.value;
    seen[cell] = true;
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) {
      throw std::invalid_argument(
          "missing '" + std::string(kind) + "' score for model " +
          model_digests[c / n_examples] + ", example " +
          std::to_string(c % n_examples));
    }
  }
  return table;
}

InsufficientObservations::InsufficientObservations(std::vector<int64_t> ids)
    : std::runtime_error([&ids] {
        std::string msg = "fewer than 2 IN or 2 OUT observations for " +
                          std::to_string(ids.size()) + " example(s):";
        for (std::size_t i = 0; i < ids.size() && i < 20; ++i) {
          msg += " " + std::to_string(ids[i]);
        }
        if (ids.size() > 20) msg += " ...";
        return msg;
      }()),
      ids_(std::move(ids)) {}

std::vector<GaussianPair> FitGaussianPairs(const ScoreTable& scores,
                                           const MembershipLedger& ledger) {
  if (ledger.num_models() != scores.n_models ||
      ledger.num_examples() != scores.n_examples) {
    throw std::invalid_argument("ledger shape does not match score table");
  }
  std::vector<GaussianPair> pairs(scores.n_examples);
  std::vector<int64_t> bad;
  std::vector<double> in, out;
  for (std::size_t i = 0; i < scores.n_examples; ++i) {
    in.clear();
    out.clear();
    for (std::size_t j = 0; j < scores.n_models; ++j) {
      (ledger.In(j, i) ? in : out).push_back(scores.at(j, i));
    }
    if (in.size() < 2 || out.size() < 2) {
      bad.push_back(static_cast<int64_t>(i));
      continue;
    }
    pairs[i] = FitGaussianPair(in, out);
  }
  if (!bad.empty()) throw InsufficientObservations(std::move(bad));
  return pairs;
}

double GaussianLogPdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) -
         0.5 * std::log(2.0 * std::numbers::pi);
}

double CurvLrScore(double target, const GaussianPair& pair) {
  const double s = pair.PooledSigma();
  return GaussianLogPdf(target, pair.mu_in, s) -
         GaussianLogPdf(target, pair.mu_out, s);
}

double CurvNllScore(double target, const GaussianPair& pair) {
  return GaussianLogPdf(target, pair.mu_in, pair.sigma_in) -
         GaussianLogPdf(target, pair.mu_out, pair.sigma_out);
}

std::string ToString(Method method) {
  switch (method) {
    case Method::kCurvLr:
      return "curv_lr";
    case Method::kCurvNll:
      return "curv_nll";
    case Method::kYeom:
      return "yeom";
    case Method::kLira:
      return "lira";
    case Method::kWatsonOffline:
      return "watson_offline";
    case Method::kSablayrolles:
      return "sablayrolles";
    case Method::kSongMentr:
      return "song_mentr";
    case Method::kYeQuantile:
      return "ye_quantile";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  for (Method m : AllMethods()) {
    if (ToString(m) == name) return m;
  }
  throw std::invalid_argument("unknown attack method '" + std::string(name) +
                              "'");
}

std::vector<Method> AllMethods() {
  return {Method::kCurvLr,        Method::kCurvNll,      Method::kYeom,
          Method::kLira,          Method::kWatsonOffline, Method::kSablayrolles,
          Method::kSongMentr,     Method::kYeQuantile};
}

double ModifiedEntropy(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw std::invalid_argument("label out of range for probability vector");
  }
  auto clip = [](double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); };
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clip(probs[i]);
    if (static_cast<int>(i) == label) {
      total -= (1.0 - p) * std::log(p);
    } else {
      total -= p * std::log1p(-p);
    }
  }
  return total;
}

double BaselineScore(Method method, const BaselineInputs& in) {
  auto require = [&](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(ToString(method) + " needs " + what);
    }
  };
  switch (method) {
    case Method::kYeom:
      return -in.target_loss;
    case Method::kLira:
      require(in.logit_pair.has_value(), "a fitted logit pair");
      return CurvNllScore(in.target_logit, *in.logit_pair);
    case Method::kWatsonOffline:
      require(!in.out_losses.empty(), "OUT shadow losses");
      return -in.target_loss + Mean(in.out_losses);
    case Method::kSablayrolles: {
      require(!in.in_losses.empty() || !in.out_losses.empty(),
              "shadow losses");
      std::vector<double> all = in.in_losses;
      all.insert(all.end(), in.out_losses.begin(), in.out_losses.end());
      return -(in.target_loss - Mean(all));
    }
    case Method::kSongMentr:
      require(!in.target_probs.empty(), "target probabilities");
      return -ModifiedEntropy(in.target_probs, in.label);
    case Method::kYeQuantile: {
      require(!in.out_losses.empty(), "OUT shadow losses");
      double below = 0.0;
      for (double l : in.out_losses) {
        if (l < in.target_loss) {
          below += 1.0;
        } else if (l == in.target_loss) {
          below += 0.5;
        }
      }
      return 1.0 - below / static_cast<double>(in.out_losses.size());
    }
    case Method::kCurvLr:
    case Method::kCurvNll:
      break;
  }
  throw std::invalid_argument(ToString(method) + " is not a baseline");
}

double AggregateAugmented(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("no per-transform statistics to aggregate");
  }
  return Mean(values);
}

std::string AttackRecordToJson(const AttackRecord& r) {
  nlohmann::ordered_json j;
  j["example_id"] = r.example_id;
  j["method"] = r.method;
  j["value"] = r.value;
  j["is_member_truth"] = r.is_member_truth;
  return j.dump();
}

AttackRecord AttackRecordFromJson(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  return {j.at("example_id").get<int64_t>(), j.at("method").get<std::string>(),
          j.at("value").get<double>(), j.at("is_member_truth").get<bool>()};
}

void WriteAttacks(const std::filesystem::path& path,
                  std::span<const AttackRecord> records) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    for (const AttackRecord& r : records) out << AttackRecordToJson(r) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::vector<AttackRecord> ReadAttacks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<AttackRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(AttackRecordFromJson(line));
  }
  return out;
}

}  // namespace curvmia
