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

#ifndef CURVMIA_NN_H_
#define CURVMIA_NN_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace curvmia {

// Probabilities are clamped into [kProbClip, 1 - kProbClip] before any log,
// so the cross-entropy is bounded by -ln(kProbClip).
inline constexpr double kProbClip = 1e-12;

// Layer widths: input dimension, hidden widths, class count.
struct LayerSizes {
  std::vector<int> sizes;

  int input_dim() const { return sizes.front(); }
  int num_classes() const { return sizes.back(); }
  std::size_t num_layers() const { return sizes.size() - 1; }
  // Throws std::invalid_argument unless there are >= 2 entries, all >= 1.
  void Validate() const;

  friend bool operator==(const LayerSizes&, const LayerSizes&) = default;
};

// Fully connected layer, weights row-major [out x in].
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

enum class Activation { kTanh };

// Feedforward classifier: tanh hidden layers, linear output, softmax.
struct MlpParams {
  LayerSizes arch;
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kTanh;
  uint64_t seed = 0;
  std::string config_digest;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

// Same shapes as MlpParams::layers.
struct MlpGradient {
  std::vector<DenseLayer> layers;
};

struct Example {
  int64_t id = 0;
  std::vector<double> x;
  int y = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

struct ForwardResult {
  std::vector<double> probs;
  double loss = 0.0;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases. Pure in
// (arch, seed).
MlpParams InitMlp(const LayerSizes& arch, uint64_t seed);

// Softmax probabilities and clamped cross-entropy -log(max(p_y, kProbClip)).
ForwardResult ForwardLoss(const MlpParams& params, const Example& example);

// Loss only, for an arbitrary input vector. This is the black-box oracle the
// curvature estimators query.
double Loss(const MlpParams& params, std::span<const double> x, int y);

// Gradient of the mean batch loss with respect to every weight and bias.
MlpGradient GradParams(const MlpParams& params, std::span<const Example> batch);

// d loss / d x by backpropagation through the input layer.
std::vector<double> GradInput(const MlpParams& params,
                              std::span<const double> x, int y);
std::vector<double> GradInput(const MlpParams& params, const Example& example);

// log(p_y / (1 - p_y)) with p_y clamped into [kProbClip, 1 - kProbClip].
double ScaledLogit(const MlpParams& params, const Example& example);
double ScaledLogitFromProb(double p);

// Checks shapes chain with arch and every entry is finite.
void ValidateParams(const MlpParams& params);

// Persistence: {arch, seed, config_digest, layers:[{w:[[..]], b:[..]}]},
// numbers printed with 17 significant digits.
std::string MlpToJson(const MlpParams& params);
MlpParams MlpFromJson(std::string_view text);

// Short SHA-256 over the persisted form.
std::string ModelDigest(const MlpParams& params);

}  // namespace curvmia

#endif  // CURVMIA_NN_H_
