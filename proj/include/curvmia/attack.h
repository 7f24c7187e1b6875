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

#ifndef CURVMIA_ATTACK_H_
#define CURVMIA_ATTACK_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "curvmia/curvature.h"
#include "curvmia/data.h"

namespace curvmia {

// Every attack score is oriented so that larger means "more likely a
// member".

inline constexpr double kSigmaFloor = 1e-8;

// Per-example Gaussian fits of a statistic over IN and OUT shadow models.
struct GaussianPair {
  double mu_in = 0.0;
  double sigma_in = 1.0;
  double mu_out = 0.0;
  double sigma_out = 1.0;
  int n_in = 0;
  int n_out = 0;

  // sqrt(((n_in-1) s_in^2 + (n_out-1) s_out^2) / (n_in + n_out - 2)),
  // floored at kSigmaFloor. Equals the common value when s_in == s_out.
  double PooledSigma() const;
  GaussianPair WithPooledSigma() const;
  // IN and OUT roles exchanged.
  GaussianPair Swapped() const;
};

// Sample mean and unbiased sample standard deviation of each side, floored
// at kSigmaFloor. Throws std::invalid_argument if a side has < 2 values.
GaussianPair FitGaussianPair(std::span<const double> in,
                             std::span<const double> out);

// Dense [model x example] matrix of one statistic.
struct ScoreTable {
  std::size_t n_models = 0;
  std::size_t n_examples = 0;
  std::vector<double> values;

  ScoreTable() = default;
  ScoreTable(std::size_t models, std::size_t examples)
      : n_models(models),
        n_examples(examples),
        values(models * examples, 0.0) {}
  double at(std::size_t model, std::size_t example) const {
    return values[model * n_examples + example];
  }
  double& at(std::size_t model, std::size_t example) {
    return values[model * n_examples + example];
  }
};

// Collects records of `kind` into a table whose row j is the model with
// digest model_digests[j]. Throws if any cell is missing.
ScoreTable BuildScoreTable(std::span<const ScoreRecord> records,
                           std::string_view kind,
                           std::span<const std::string> model_digests,
                           std::size_t n_examples);

class InsufficientObservations : public std::runtime_error {
 public:
  explicit InsufficientObservations(std::vector<int64_t> ids);
  const std::vector<int64_t>& example_ids() const { return ids_; }

 private:
  std::vector<int64_t> ids_;
};

// One pair per example, IN/OUT sides read off the ledger. Throws
// InsufficientObservations listing every example with < 2 IN or < 2 OUT
// observations.
std::vector<GaussianPair> FitGaussianPairs(const ScoreTable& scores,
                                           const MembershipLedger& ledger);

// log N(x | mu, sigma^2).
double GaussianLogPdf(double x, double mu, double sigma);

// Likelihood-ratio test under a shared (pooled) sigma:
// log N(t | mu_in, s^2) - log N(t | mu_out, s^2), s = pair.PooledSigma().
double CurvLrScore(double target, const GaussianPair& pair);

// Log-likelihood ratio with per-side sigma:
// log N(t | mu_in, s_in^2) - log N(t | mu_out, s_out^2). This is the negated
// NLL statistic log P(t|out) - log P(t|in), so that larger means member.
double CurvNllScore(double target, const GaussianPair& pair);

enum class Method {
  kCurvLr,
  kCurvNll,
  kYeom,
  kLira,
  kWatsonOffline,
  kSablayrolles,
  kSongMentr,
  kYeQuantile,
};

std::string ToString(Method method);
Method ParseMethod(std::string_view name);
std::vector<Method> AllMethods();

struct BaselineInputs {
  double target_loss = 0.0;
  double target_logit = 0.0;
  std::vector<double> target_probs;
  int label = 0;
  std::vector<double> in_losses;
  std::vector<double> out_losses;
  std::optional<GaussianPair> logit_pair;
};

// Yeom: -loss.
// LiRA: per-side Gaussian log-LR on the scaled logit (needs logit_pair).
// Watson offline: -loss + mean(OUT losses).
// Sablayrolles: -(loss - mean of all shadow losses).
// Song: -Mentr(p, y), Mentr = -(1-p_y) log p_y - sum_{i!=y} p_i log(1-p_i),
//   probabilities clamped into [kProbClip, 1 - kProbClip].
// Ye quantile: 1 - midrank quantile of the loss among the OUT losses.
// Throws std::invalid_argument when a required statistic is absent or
// `method` is a curvature attack.
double BaselineScore(Method method, const BaselineInputs& inputs);

double ModifiedEntropy(std::span<const double> probs, int label);

// Arithmetic mean of per-transform statistics. Throws on empty input.
double AggregateAugmented(std::span<const double> values);

struct AttackRecord {
  int64_t example_id = 0;
  std::string method;
  double value = 0.0;
  bool is_member_truth = false;
};

std::string AttackRecordToJson(const AttackRecord& record);
AttackRecord AttackRecordFromJson(std::string_view line);
void WriteAttacks(const std::filesystem::path& path,
                  std::span<const AttackRecord> records);
std::vector<AttackRecord> ReadAttacks(const std::filesystem::path& path);

}  // namespace curvmia

#endif  // CURVMIA_ATTACK_H_
