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

#include "curvmia/trainer.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "curvmia/digest.h"
#include "curvmia/parallel.h"
#include "curvmia/random.h"
#include "curvmia/simd/kernels.h"
#include "json.hpp"

namespace curvmia {
namespace {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void TrainHyper::Validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) {
    throw std::invalid_argument("weight_decay must be >= 0");
  }
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) {
    throw std::invalid_argument("lr_decay_factor must lie in (0, 1]");
  }
}

std::string TrainHyper::Canonical() const {
  std::ostringstream os;
  os << "epochs=" << epochs << ";batch=" << batch_size
     << ";lr=" << FormatDouble(lr) << ";momentum=" << FormatDouble(momentum)
     << ";wd=" << FormatDouble(weight_decay) << ";decay=";
  for (int e : lr_decay_epochs) os << e << ',';
  os << ";factor=" << FormatDouble(lr_decay_factor);
  return os.str();
}

MlpParams TrainModel(const Dataset& dataset, const SubsetMask& mask,
                     const LayerSizes& arch, const TrainHyper& hyper,
                     uint64_t seed) {
  hyper.Validate();
  arch.Validate();
  if (mask.size() != dataset.size()) {
    throw std::invalid_argument("mask length does not match dataset");
  }
  if (arch.input_dim() != dataset.d || arch.num_classes() != dataset.k) {
    throw std::invalid_argument("architecture does not match dataset shape");
  }
  std::vector<Example> train;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (mask.bits[i]) train.push_back(dataset.examples[i]);
  }
  if (train.empty()) throw std::invalid_argument("empty training subset");

  MlpParams params = InitMlp(arch, seed);
  std::ostringstream cfg;
  cfg << "arch=";
  for (int s : arch.sizes) cfg << s << ',';
  cfg << ';' << hyper.Canonical();
  params.config_digest = ShortDigest(cfg.str());

  MlpGradient velocity;
  for (const DenseLayer& layer : params.layers) {
    DenseLayer v = layer;
    std::fill(v.w.begin(), v.w.end(), 0.0);
    std::fill(v.b.begin(), v.b.end(), 0.0);
    velocity.layers.push_back(std::move(v));
  }

  const auto& k = simd::Active();
  Rng rng(DeriveSeed(seed, 0, kStreamShuffle));
  double lr = hyper.lr;
  const std::size_t batch = static_cast<std::size_t>(hyper.batch_size);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (std::find(hyper.lr_decay_epochs.begin(), hyper.lr_decay_epochs.end(),
                  epoch) != hyper.lr_decay_epochs.end()) {
      lr *= hyper.lr_decay_factor;
    }
    rng.Shuffle(std::span<Example>(train));
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t len = std::min(batch, train.size() - start);
      MlpGradient g = GradParams(
          params, std::span<const Example>(train.data() + start, len));
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        DenseLayer& p = params.layers[l];
        DenseLayer& v = velocity.layers[l];
        DenseLayer& gl = g.layers[l];
        if (hyper.weight_decay > 0.0) {
          k.axpy(hyper.weight_decay, p.w.data(), gl.w.data(), gl.w.size());
          k.axpy(hyper.weight_decay, p.b.data(), gl.b.data(), gl.b.size());
        }
        for (std::size_t i = 0; i < v.w.size(); ++i) {
          v.w[i] = hyper.momentum * v.w[i] + gl.w[i];
        }
        for (std::size_t i = 0; i < v.b.size(); ++i) {
          v.b[i] = hyper.momentum * v.b[i] + gl.b[i];
        }
        k.axpy(-lr, v.w.data(), p.w.data(), p.w.size());
        k.axpy(-lr, v.b.data(), p.b.data(), p.b.size());
      }
    }
  }
  ValidateParams(params);
  return params;
}

ShadowEnsemble TrainShadowEnsemble(const Dataset& dataset, int n_models,
                                   double fraction, const LayerSizes& arch,
                                   const TrainHyper& hyper,
                                   uint64_t master_seed, int jobs) {
  if (n_models < 2) throw std::invalid_argument("need at least 2 shadow models");
  ShadowEnsemble ens;
  ens.master_seed = master_seed;
  ens.fraction = fraction;
  ens.dataset_digest = DatasetDigest(dataset);
  const auto n = static_cast<std::size_t>(n_models);
  ens.models.resize(n);
  ens.seeds.resize(n);
  ens.digests.resize(n);
  ens.ledger.rows.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    ens.seeds[j] = DeriveSeed(master_seed, j, kStreamShadow);
    ens.ledger.rows[j] =
        SampleSubset(dataset, fraction, DeriveSeed(ens.seeds[j], 0, kStreamSplit));
  }
  ParallelFor(n, jobs, [&](std::size_t j) {
    ens.models[j] =
        TrainModel(dataset, ens.ledger.rows[j], arch, hyper, ens.seeds[j]);
    ens.digests[j] = ModelDigest(ens.models[j]);
  });
  return ens;
}

void SaveEnsemble(const ShadowEnsemble& ensemble,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json ledger;
  ledger["master_seed"] = ensemble.master_seed;
  ledger["dataset_digest"] = ensemble.dataset_digest;
  ledger["fraction"] = ensemble.fraction;
  nlohmann::json models = nlohmann::json::array();
  nlohmann::json matrix = nlohmann::json::array();
  for (std::size_t j = 0; j < ensemble.models.size(); ++j) {
    models.push_back({{"index", j},
                      {"seed", ensemble.seeds[j]},
                      {"digest", ensemble.digests[j]}});
    std::vector<int> row;
    for (bool b : ensemble.ledger.rows[j].bits) row.push_back(b ? 1 : 0);
    matrix.push_back(row);
    WriteFile(dir / ("model_" + std::to_string(j) + ".json"),
              MlpToJson(ensemble.models[j]));
  }
  ledger["models"] = models;
  ledger["in_matrix"] = matrix;
  WriteFile(dir / "ledger.json", ledger.dump(1) + "\n");
}

ShadowEnsemble LoadEnsemble(const std::filesystem::path& dir) {
  const auto ledger = nlohmann::json::parse(ReadFile(dir / "ledger.json"));
  ShadowEnsemble ens;
  ens.master_seed = ledger.at("master_seed").get<uint64_t>();
  ens.dataset_digest = ledger.at("dataset_digest").get<std::string>();
  ens.fraction = ledger.at("fraction").get<double>();
  const auto& models = ledger.at("models");
  const auto& matrix = ledger.at("in_matrix");
  if (models.size() != matrix.size()) {
    throw std::runtime_error("ledger rows do not match model count");
  }
  for (std::size_t j = 0; j < models.size(); ++j) {
    ens.seeds.push_back(models[j].at("seed").get<uint64_t>());
    ens.digests.push_back(models[j].at("digest").get<std::string>());
    SubsetMask row;
    for (int b : matrix[j].get<std::vector<int>>()) row.bits.push_back(b != 0);
    ens.ledger.rows.push_back(std::move(row));
    MlpParams p =
        MlpFromJson(ReadFile(dir / ("model_" + std::to_string(j) + ".json")));
    if (ModelDigest(p) != ens.digests.back()) {
      throw std::runtime_error("model_" + std::to_string(j) +
                               ".json does not match its ledger digest");
    }
    ens.models.push_back(std::move(p));
  }
  return ens;
}

double MeanLoss(const MlpParams& params, const Dataset& dataset,
                const SubsetMask& mask) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!mask.bits[i]) continue;
    total += ForwardLoss(params, dataset.examples[i]).loss;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("empty mask");
  return total / static_cast<double>(n);
}

double Accuracy(const MlpParams& params, const Dataset& dataset,
                const SubsetMask& mask) {
  std::size_t correct = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!mask.bits[i]) continue;
    const auto r = ForwardLoss(params, dataset.examples[i]);
    const auto best = std::max_element(r.probs.begin(), r.probs.end());
    if (best - r.probs.begin() == dataset.examples[i].y) ++correct;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("empty mask");
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace curvmia
