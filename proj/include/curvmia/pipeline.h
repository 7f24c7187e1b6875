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

#ifndef CURVMIA_PIPELINE_H_
#define CURVMIA_PIPELINE_H_

// Experiment orchestration. A run directory holds:
//   manifest.json     canonical manifest
//   dataset.csv       data.json (digest, split)
//   target_model.json shadows/ledger.json shadows/model_<j>.json
//   scores.jsonl      {example_id, model_digest, kind, value, config_digest}
//   pairs.json        theory.json (when a curvature attack runs)
//   attacks.jsonl     {example_id, method, value, is_member_truth}
//   metrics.json      roc_<method>.csv
//   stages.json       cache keys of completed stages

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvmia/attack.h"
#include "curvmia/curvature.h"
#include "curvmia/data.h"
#include "curvmia/metrics.h"
#include "curvmia/nn.h"
#include "curvmia/theory.h"
#include "curvmia/trainer.h"
#include "json.hpp"

namespace curvmia {

struct CsvSource {
  std::string path;
  CsvSchema schema;
};

struct DatasetSource {
  std::optional<MixtureSpec> generator;
  std::optional<CsvSource> csv;
};

struct ExperimentManifest {
  std::string name = "experiment";
  DatasetSource dataset;
  LayerSizes arch;
  TrainHyper hyper;
  int n_shadow_models = 32;
  double shadow_fraction = 0.5;
  CurvatureConfig curvature;
  std::vector<Method> attacks;
  std::vector<TransformSpec> transforms = {TransformSpec{}};
  std::vector<double> fpr_targets = {0.1, 0.01, 0.001};
  uint64_t master_seed = 0;
  std::string output_dir;

  void Validate() const;
};

// Relative CSV paths are resolved against `base_dir`.
ExperimentManifest ManifestFromJson(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
ExperimentManifest LoadManifest(const std::filesystem::path& path);
nlohmann::ordered_json ManifestToJson(const ExperimentManifest& manifest);
// SHA-256 over the canonical JSON, output_dir excluded.
std::string ManifestDigest(const ExperimentManifest& manifest);

enum class Stage { kData, kTrain, kScore, kAttack, kEvaluate };
std::string ToString(Stage stage);

// Carries the failing stage; what() reads "stage '<name>': <cause>".
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& cause);
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct RunOptions {
  std::filesystem::path out_dir;
  int jobs = 1;
  Stage stop_after = Stage::kEvaluate;
  // Reuse train/score outputs whose cache key matches.
  bool resume = true;
  // Replaces the manifest's dataset source (used by the size sweep).
  std::optional<Dataset> dataset_override;
};

struct ExperimentResult {
  std::string manifest_digest;
  std::string dataset_digest;
  std::vector<AttackRecord> attacks;
  std::vector<MethodMetrics> metrics;
  std::vector<GaussianPair> curvature_pairs;
  std::vector<std::string> stages_skipped;
};

// data -> target model + shadow ensemble -> per-(example, model) scores ->
// Gaussian fits and attack scores -> metrics. The target model trains on
// half of the pool (members); the other half are the nonmembers. Shadow
// models train on independent `shadow_fraction` subsets of the whole pool.
ExperimentResult RunExperiment(const ExperimentManifest& manifest,
                               const RunOptions& options);

enum class Selection { kRandom, kLowestCurvature };
Selection ParseSelection(const std::string& name);

struct SweepRow {
  int size = 0;  // target training-set size
  std::string method;
  double auroc = 0.0;
  double bal_acc = 0.0;
};

// For each size s, draws 2s examples from the manifest's pool (uniformly,
// or the 2s lowest-curvature examples under a reference model trained on
// the whole pool) and runs the experiment on them in out_dir/size_<s>.
// Writes out_dir/sweep.csv (size,method,auroc,bal_acc).
std::vector<SweepRow> SweepDatasetSize(const ExperimentManifest& manifest,
                                       std::span<const int> sizes,
                                       Selection selection,
                                       const RunOptions& options);

// Reads "epsilon,value" rows and fits the bound curve.
std::vector<std::pair<double, double>> ReadBoundPoints(
    const std::filesystem::path& path, bool header);
nlohmann::ordered_json FitResultToJson(const FitResult& fit);
FitResult FitBound(const std::filesystem::path& points_csv,
                   const std::filesystem::path& out_json, bool header = false);

// All bounds for the given inputs; flags optimistic constants when gamma,
// delta_bias and rho_term are all zero.
nlohmann::ordered_json TheoryReport(const BoundInputs& inputs);
nlohmann::ordered_json KlSummaryToJson(const KlSummary& summary);

}  // namespace curvmia

#endif  // CURVMIA_PIPELINE_H_
