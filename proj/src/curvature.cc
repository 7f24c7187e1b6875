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

#include "curvmia/curvature.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "curvmia/digest.h"
#include "curvmia/random.h"
#include "curvmia/simd/kernels.h"
#include "json.hpp"

namespace curvmia {
namespace {

double Checked(double v) {
  if (!std::isfinite(v)) {
    throw std::domain_error("loss oracle returned a non-finite value");
  }
  return v;
}

void FillRademacher(Rng& rng, std::vector<double>& v) {
  for (double& e : v) e = rng.Rademacher();
}

}  // namespace

void CurvatureConfig::Validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("curvature step h must be positive");
  }
  if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
}

std::string CurvatureConfig::Canonical() const {
  std::ostringstream os;
  os << "variant=" << ToString(variant) << ";mode=" << ToString(probe_mode)
     << ";h=" << FormatDouble(h) << ";n_iter=" << n_iter << ";seed=" << seed;
  return os.str();
}

std::string CurvatureConfig::Digest() const { return ShortDigest(Canonical()); }

std::string ToString(ProbeMode mode) {
  return mode == ProbeMode::kCoupled ? "coupled" : "paired";
}

std::string ToString(CurvatureVariant variant) {
  switch (variant) {
    case CurvatureVariant::kZeroOrder:
      return "zero_order";
    case CurvatureVariant::kHutchinsonTrace:
      return "hutchinson_trace";
    case CurvatureVariant::kHutchinsonSqProxy:
      return "hutchinson_sq_proxy";
    case CurvatureVariant::kExactOracle:
      return "exact_oracle";
  }
  return "unknown";
}

ProbeMode ParseProbeMode(std::string_view name) {
  if (name == "coupled") return ProbeMode::kCoupled;
  if (name == "paired") return ProbeMode::kPaired;
  throw std::invalid_argument("unknown probe mode '" + std::string(name) + "'");
}

CurvatureVariant ParseCurvatureVariant(std::string_view name) {
  if (name == "zero_order") return CurvatureVariant::kZeroOrder;
  if (name == "hutchinson_trace") return CurvatureVariant::kHutchinsonTrace;
  if (name == "hutchinson_sq_proxy") return CurvatureVariant::kHutchinsonSqProxy;
  if (name == "exact_oracle") return CurvatureVariant::kExactOracle;
  throw std::invalid_argument("unknown curvature variant '" +
                              std::string(name) + "'");
}

double FourPointEstimate(const LossOracle& f, std::span<const double> x,
                         double h, std::span<const double> u,
                         std::span<const double> v) {
  const std::size_t d = x.size();
  if (u.size() != d || v.size() != d) {
    throw std::invalid_argument("probe dimension mismatch");
  }
  std::vector<double> pp(d), mp(d), pm(d), mm(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double hv = h * v[i];
    const double hu = h * u[i];
    pp[i] = x[i] + hv + hu;
    mp[i] = x[i] - hv + hu;
    pm[i] = x[i] + hv - hu;
    mm[i] = x[i] - hv - hu;
  }
  const double num = Checked(f(pp)) - Checked(f(mp)) - Checked(f(pm)) +
                     Checked(f(mm));
  return num / (4.0 * h * h);
}

double ZoCurvature(const LossOracle& f, std::span<const double> x,
                   const CurvatureConfig& cfg) {
  cfg.Validate();
  if (cfg.variant != CurvatureVariant::kZeroOrder) {
    throw std::invalid_argument("ZoCurvature needs variant zero_order");
  }
  Rng rng(cfg.seed);
  std::vector<double> u(x.size()), v(x.size());
  double total = 0.0;
  for (int it = 0; it < cfg.n_iter; ++it) {
    FillRademacher(rng, v);
    if (cfg.probe_mode == ProbeMode::kCoupled) {
      total += FourPointEstimate(f, x, cfg.h, v, v);
    } else {
      FillRademacher(rng, u);
      const double uv = simd::Active().dot(u.data(), v.data(), u.size());
      total += FourPointEstimate(f, x, cfg.h, u, v) * uv;
    }
  }
  return total / cfg.n_iter;
}

HutchinsonProbe HutchinsonProbeEstimate(const GradientOracle& g,
                                        std::span<const double> x, double h,
                                        std::span<const double> v) {
  const std::size_t d = x.size();
  std::vector<double> g0(d), g1(d), shifted(d);
  for (std::size_t i = 0; i < d; ++i) shifted[i] = x[i] + h * v[i];
  g(x, g0);
  g(shifted, g1);
  HutchinsonProbe out{0.0, 0.0};
  for (std::size_t i = 0; i < d; ++i) {
    const double hv = (g1[i] - g0[i]) / h;
    if (!std::isfinite(hv)) {
      throw std::domain_error("gradient oracle returned a non-finite value");
    }
    out.quad += v[i] * hv;
    out.sq_norm += hv * hv;
  }
  return out;
}

double HutchinsonCurvature(const GradientOracle& g, std::span<const double> x,
                           const CurvatureConfig& cfg) {
  cfg.Validate();
  const bool sq = cfg.variant == CurvatureVariant::kHutchinsonSqProxy;
  if (!sq && cfg.variant != CurvatureVariant::kHutchinsonTrace) {
    throw std::invalid_argument(
        "HutchinsonCurvature needs a hutchinson_* variant");
  }
  Rng rng(cfg.seed);
  std::vector<double> v(x.size());
  double total = 0.0;
  for (int it = 0; it < cfg.n_iter; ++it) {
    FillRademacher(rng, v);
    const HutchinsonProbe p = HutchinsonProbeEstimate(g, x, cfg.h, v);
    total += sq ? p.sq_norm : p.quad;
  }
  return total / cfg.n_iter;
}

double HutchinsonCurvature(const MlpParams& params, const Example& example,
                           const CurvatureConfig& cfg) {
  const int y = example.y;
  GradientOracle g = [&params, y](std::span<const double> x,
                                  std::span<double> out) {
    const std::vector<double> grad = GradInput(params, x, y);
    std::copy(grad.begin(), grad.end(), out.begin());
  };
  return HutchinsonCurvature(g, example.x, cfg);
}

double ExactTraceOracle(const LossOracle& f, std::span<const double> x,
                        double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step h must be positive");
  if (x.size() > kExactOracleMaxDim) {
    throw std::invalid_argument("exact trace oracle limited to d <= 64");
  }
  const double f0 = Checked(f(x));
  std::vector<double> probe(x.begin(), x.end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = Checked(f(probe));
    probe[i] = x[i] - h;
    const double fm = Checked(f(probe));
    probe[i] = x[i];
    total += (fp - 2.0 * f0 + fm) / (h * h);
  }
  return total;
}

uint64_t ProbeSeed(uint64_t cfg_seed, int64_t example_id,
                   std::string_view model_digest) {
  const std::string digest = Sha256Hex(model_digest);
  uint64_t model_bits = 0;
  for (int i = 0; i < 16; ++i) {
    const char c = digest[static_cast<std::size_t>(i)];
    model_bits = (model_bits << 4) |
                 static_cast<uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
  }
  return DeriveSeed(cfg_seed ^ model_bits, static_cast<uint64_t>(example_id),
                    kStreamProbe);
}

double EstimateCurvature(const MlpParams& params, const Example& example,
                         const CurvatureConfig& cfg,
                         std::string_view model_digest) {
  CurvatureConfig local = cfg;
  local.seed = ProbeSeed(cfg.seed, example.id, model_digest);
  const int y = example.y;
  LossOracle f = [&params, y](std::span<const double> x) {
    return Loss(params, x, y);
  };
  switch (cfg.variant) {
    case CurvatureVariant::kZeroOrder:
      return ZoCurvature(f, example.x, local);
    case CurvatureVariant::kHutchinsonTrace:
    case CurvatureVariant::kHutchinsonSqProxy:
      return HutchinsonCurvature(params, example, local);
    case CurvatureVariant::kExactOracle:
      return ExactTraceOracle(f, example.x, cfg.h);
  }
  throw std::invalid_argument("unknown curvature variant");
}

std::string ScoreRecordToJson(const ScoreRecord& r) {
  nlohmann::ordered_json j;
  j["example_id"] = r.example_id;
  j["model_digest"] = r.model_digest;
  j["kind"] = r.kind;
  j["value"] = r.value;
  j["config_digest"] = r.config_digest;
  return j.dump();
}

ScoreRecord ScoreRecordFromJson(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  ScoreRecord r;
  r.example_id = j.at("example_id").get<int64_t>();
  r.model_digest = j.at("model_digest").get<std::string>();
  r.kind = j.at("kind").get<std::string>();
  r.value = j.at("value").get<double>();
  r.config_digest = j.at("config_digest").get<std::string>();
  return r;
}

void AppendScores(const std::filesystem::path& path,
                  std::span<const ScoreRecord> records) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  for (const ScoreRecord& r : records) out << ScoreRecordToJson(r) << '\n';
}

std::vector<ScoreRecord> ReadScores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<ScoreRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(ScoreRecordFromJson(line));
  }
  return out;
}

}  // namespace curvmia
