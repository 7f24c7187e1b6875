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

#include "curvmia/nn.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "curvmia/digest.h"
#include "curvmia/random.h"
#include "curvmia/simd/kernels.h"
#include "json.hpp"

namespace curvmia {
namespace {

// Per-call scratch: activations of every layer (acts[0] is the input) and
// the backward signal.
struct Workspace {
  std::vector<std::vector<double>> acts;
  std::vector<double> delta;
  std::vector<double> back;

  explicit Workspace(const LayerSizes& arch) : acts(arch.sizes.size()) {
    for (std::size_t i = 0; i < arch.sizes.size(); ++i) {
      acts[i].resize(static_cast<std::size_t>(arch.sizes[i]));
    }
  }
};

void CheckInput(const MlpParams& params, std::span<const double> x, int y) {
  if (static_cast<int>(x.size()) != params.arch.input_dim()) {
    throw std::invalid_argument("input dimension " + std::to_string(x.size()) +
                                " does not match model input dimension " +
                                std::to_string(params.arch.input_dim()));
  }
  if (y < 0 || y >= params.arch.num_classes()) {
    throw std::invalid_argument("label " + std::to_string(y) +
                                " out of range for " +
                                std::to_string(params.arch.num_classes()) +
                                " classes");
  }
}

// Fills ws.acts; the last entry holds the logits.
void Forward(const MlpParams& params, std::span<const double> x,
             Workspace& ws) {
  const auto& k = simd::Active();
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
  const std::size_t n = params.layers.size();
  for (std::size_t l = 0; l < n; ++l) {
    const DenseLayer& layer = params.layers[l];
    std::vector<double>& out = ws.acts[l + 1];
    k.gemv(layer.w.data(), ws.acts[l].data(), layer.b.data(), out.data(),
           static_cast<std::size_t>(layer.out),
           static_cast<std::size_t>(layer.in));
    if (l + 1 < n) {
      for (double& v : out) v = std::tanh(v);
    }
  }
}

struct SoftmaxOut {
  double loss;
  bool clamped;
};

// Converts logits to probabilities in place.
SoftmaxOut Softmax(std::vector<double>& logits, int y) {
  const double top = *std::max_element(logits.begin(), logits.end());
  const double zy = logits[static_cast<std::size_t>(y)];
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  const double raw = (top - zy) + std::log(sum);  // -log p_y
  const double ceiling = -std::log(kProbClip);
  if (raw > ceiling) return {ceiling, true};
  return {raw, false};
}

// Backpropagates from ws.delta (gradient w.r.t. the logits). Accumulates
// parameter gradients into grad (if non-null) and the input gradient into
// grad_x (if non-empty).
void Backward(const MlpParams& params, Workspace& ws, MlpGradient* grad,
              std::span<double> grad_x) {
  const auto& k = simd::Active();
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    const auto rows = static_cast<std::size_t>(layer.out);
    const auto cols = static_cast<std::size_t>(layer.in);
    if (grad != nullptr) {
      DenseLayer& g = grad->layers[l];
      k.ger(1.0, ws.delta.data(), ws.acts[l].data(), g.w.data(), rows, cols);
      k.axpy(1.0, ws.delta.data(), g.b.data(), rows);
    }
    if (l == 0 && grad_x.empty()) break;
    ws.back.resize(cols);
    k.gemv_t(layer.w.data(), ws.delta.data(), ws.back.data(), rows, cols);
    if (l == 0) {
      std::copy(ws.back.begin(), ws.back.end(), grad_x.begin());
      break;
    }
    const std::vector<double>& a = ws.acts[l];
    ws.delta.resize(cols);
    for (std::size_t i = 0; i < cols; ++i) {
      ws.delta[i] = ws.back[i] * (1.0 - a[i] * a[i]);
    }
  }
}

// Sets ws.delta to d loss / d logits, scaled. Zero when the clamp is active.
void LogitGradient(Workspace& ws, int y, bool clamped, double scale) {
  const std::vector<double>& probs = ws.acts.back();
  ws.delta.assign(probs.size(), 0.0);
  if (clamped) return;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    ws.delta[i] = scale * probs[i];
  }
  ws.delta[static_cast<std::size_t>(y)] -= scale;
}

MlpGradient ZeroGradient(const MlpParams& params) {
  MlpGradient g;
  g.layers.reserve(params.layers.size());
  for (const DenseLayer& layer : params.layers) {
    DenseLayer z;
    z.in = layer.in;
    z.out = layer.out;
    z.w.assign(layer.w.size(), 0.0);
    z.b.assign(layer.b.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

}  // namespace

void LayerSizes::Validate() const {
  if (sizes.size() < 2) {
    throw std::invalid_argument(
        "architecture needs at least an input and an output layer");
  }
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("layer sizes must be >= 1");
  }
}

MlpParams InitMlp(const LayerSizes& arch, uint64_t seed) {
  arch.Validate();
  MlpParams p;
  p.arch = arch;
  p.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    DenseLayer layer;
    layer.in = arch.sizes[l];
    layer.out = arch.sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
    for (double& w : layer.w) w = rng.Uniform(-bound, bound);
    layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

ForwardResult ForwardLoss(const MlpParams& params, const Example& example) {
  CheckInput(params, example.x, example.y);
  Workspace ws(params.arch);
  Forward(params, example.x, ws);
  const SoftmaxOut s = Softmax(ws.acts.back(), example.y);
  return {ws.acts.back(), s.loss};
}

double Loss(const MlpParams& params, std::span<const double> x, int y) {
  CheckInput(params, x, y);
  Workspace ws(params.arch);
  Forward(params, x, ws);
  return Softmax(ws.acts.back(), y).loss;
}

MlpGradient GradParams(const MlpParams& params,
                       std::span<const Example> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  MlpGradient grad = ZeroGradient(params);
  Workspace ws(params.arch);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Example& ex : batch) {
    CheckInput(params, ex.x, ex.y);
    Forward(params, ex.x, ws);
    const SoftmaxOut s = Softmax(ws.acts.back(), ex.y);
    LogitGradient(ws, ex.y, s.clamped, scale);
    Backward(params, ws, &grad, {});
  }
  return grad;
}

std::vector<double> GradInput(const MlpParams& params,
                              std::span<const double> x, int y) {
  CheckInput(params, x, y);
  Workspace ws(params.arch);
  Forward(params, x, ws);
  const SoftmaxOut s = Softmax(ws.acts.back(), y);
  LogitGradient(ws, y, s.clamped, 1.0);
  std::vector<double> gx(x.size(), 0.0);
  Backward(params, ws, nullptr, gx);
  return gx;
}

std::vector<double> GradInput(const MlpParams& params, const Example& example) {
  return GradInput(params, example.x, example.y);
}

double ScaledLogitFromProb(double p) {
  const double q = std::clamp(p, kProbClip, 1.0 - kProbClip);
  return std::log(q) - std::log1p(-q);
}

double ScaledLogit(const MlpParams& params, const Example& example) {
  const ForwardResult r = ForwardLoss(params, example);
  return ScaledLogitFromProb(r.probs[static_cast<std::size_t>(example.y)]);
}

void ValidateParams(const MlpParams& params) {
  params.arch.Validate();
  if (params.layers.size() != params.arch.num_layers()) {
    throw std::invalid_argument("layer count does not match architecture");
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    if (layer.in != params.arch.sizes[l] ||
        layer.out != params.arch.sizes[l + 1] ||
        layer.w.size() != static_cast<std::size_t>(layer.in) * layer.out ||
        layer.b.size() != static_cast<std::size_t>(layer.out)) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " shape does not chain with architecture");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.w.begin(), layer.w.end(), finite) ||
        !std::all_of(layer.b.begin(), layer.b.end(), finite)) {
      throw std::invalid_argument("non-finite parameter in layer " +
                                  std::to_string(l));
    }
  }
}

std::string MlpToJson(const MlpParams& params) {
  std::ostringstream os;
  os << "{\"arch\":[";
  for (std::size_t i = 0; i < params.arch.sizes.size(); ++i) {
    if (i) os << ',';
    os << params.arch.sizes[i];
  }
  os << "],\"seed\":" << params.seed << ",\"config_digest\":"
     << nlohmann::json(params.config_digest).dump() << ",\"layers\":[";
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    if (l) os << ',';
    os << "{\"w\":[";
    for (int r = 0; r < layer.out; ++r) {
      if (r) os << ',';
      os << '[';
      for (int c = 0; c < layer.in; ++c) {
        if (c) os << ',';
        os << FormatDouble(layer.w[static_cast<std::size_t>(r) * layer.in + c]);
      }
      os << ']';
    }
    os << "],\"b\":[";
    for (int r = 0; r < layer.out; ++r) {
      if (r) os << ',';
      os << FormatDouble(layer.b[static_cast<std::size_t>(r)]);
    }
    os << "]}";
  }
  os << "]}";
  return os.str();
}

MlpParams MlpFromJson(std::string_view text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  MlpParams p;
  p.arch.sizes = j.at("arch").get<std::vector<int>>();
  p.arch.Validate();
  p.seed = j.at("seed").get<uint64_t>();
  p.config_digest = j.value("config_digest", std::string());
  for (const auto& jl : j.at("layers")) {
    DenseLayer layer;
    const auto rows = jl.at("w").get<std::vector<std::vector<double>>>();
    layer.out = static_cast<int>(rows.size());
    layer.in = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != layer.in) {
        throw std::invalid_argument("ragged weight matrix in model file");
      }
      layer.w.insert(layer.w.end(), row.begin(), row.end());
    }
    layer.b = jl.at("b").get<std::vector<double>>();
    p.layers.push_back(std::move(layer));
  }
  ValidateParams(p);
  return p;
}

std::string ModelDigest(const MlpParams& params) {
  return ShortDigest(MlpToJson(params));
}

}  // namespace curvmia
