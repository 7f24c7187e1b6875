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

#ifndef CURVMIA_TRAINER_H_
#define CURVMIA_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "curvmia/data.h"
#include "curvmia/nn.h"

namespace curvmia {

// SGD with momentum. Defaults are the desk-scale overfitting recipe.
struct TrainHyper {
  int epochs = 200;
  int batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::vector<int> lr_decay_epochs = {120, 160};
  double lr_decay_factor = 0.1;

  void Validate() const;
  // Canonical text form, hashed into MlpParams::config_digest.
  std::string Canonical() const;
};

// Trains InitMlp(arch, seed) on the masked examples. Each epoch shuffles with
// a generator derived from `seed`; the learning rate is multiplied by
// lr_decay_factor when an epoch index in lr_decay_epochs is reached.
// Velocity update: v = momentum * v + (g + weight_decay * w); w -= lr * v.
MlpParams TrainModel(const Dataset& dataset, const SubsetMask& mask,
                     const LayerSizes& arch, const TrainHyper& hyper,
                     uint64_t seed);

struct ShadowEnsemble {
  std::vector<MlpParams> models;
  std::vector<uint64_t> seeds;
  std::vector<std::string> digests;
  MembershipLedger ledger;
  std::string dataset_digest;
  uint64_t master_seed = 0;
  double fraction = 0.5;
};

// Model j uses seed DeriveSeed(master_seed, j, kStreamShadow) for both its
// subset (SampleSubset(dataset, fraction, seed)) and its training run.
ShadowEnsemble TrainShadowEnsemble(const Dataset& dataset, int n_models,
                                   double fraction, const LayerSizes& arch,
                                   const TrainHyper& hyper,
                                   uint64_t master_seed, int jobs = 1);

// Directory layout: ledger.json plus model_<j>.json per model.
void SaveEnsemble(const ShadowEnsemble& ensemble,
                  const std::filesystem::path& dir);
// Verifies each model file against the digest recorded in the ledger.
ShadowEnsemble LoadEnsemble(const std::filesystem::path& dir);

double MeanLoss(const MlpParams& params, const Dataset& dataset,
                const SubsetMask& mask);
double Accuracy(const MlpParams& params, const Dataset& dataset,
                const SubsetMask& mask);

}  // namespace curvmia

#endif  // CURVMIA_TRAINER_H_
