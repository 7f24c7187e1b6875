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

#include "curvmia/theory.h"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace curvmia {
namespace {

double OneMinusExpNeg(double epsilon) { return -std::expm1(-epsilon); }

}  // namespace

void BoundInputs::Validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (!(m >= 2.0)) throw std::invalid_argument("m must be >= 2");
  if (!(L > 0.0)) throw std::invalid_argument("L must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(gamma >= 0.0) || !(delta_bias >= 0.0) || !(rho_term >= 0.0)) {
    throw std::invalid_argument("gamma, delta_bias, rho_term must be >= 0");
  }
  if (!(delta_conf > 0.0 && delta_conf < 1.0)) {
    throw std::invalid_argument("delta_conf must lie in (0, 1)");
  }
}

double BoundInputs::Beta() const { return L * OneMinusExpNeg(epsilon); }

double BoundInputs::C1() const {
  return (4.0 * m - 1.0) * gamma + 2.0 * (m - 1.0) * delta_bias + rho_term;
}

double BoundInputs::C() const { return C1() + L; }

double KlGaussian(double mu1, double s1, double mu2, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) {
    throw std::invalid_argument("standard deviations must be positive");
  }
  const double d = mu1 - mu2;
  return std::log(s2 / s1) + (s1 * s1 + d * d) / (2.0 * s2 * s2) - 0.5;
}

double Theorem1Bound(double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  return epsilon;
}

double Theorem2Bound(const BoundInputs& b) {
  b.Validate();
  const double inner = b.m * b.Beta() + b.C();
  return inner * inner / (2.0 * b.sigma * b.sigma);
}

double LemmaCurvUpper(const BoundInputs& b) {
  b.Validate();
  return b.L * (b.m * OneMinusExpNeg(b.epsilon) + 1.0) + b.C1();
}

double Theorem3CrossoverM(const BoundInputs& b, double c) {
  b.Validate();
  if (b.epsilon == 0.0) {
    throw std::invalid_argument("crossover undefined for epsilon = 0");
  }
  return (std::sqrt(2.0 * b.sigma * b.sigma * b.epsilon) - c) / b.Beta();
}

double BoundCurve(double epsilon, double s, double L, double c) {
  const double inner = L * OneMinusExpNeg(epsilon) + c;
  return s * inner * inner;
}

FitResult FitBoundCurve(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) {
    throw std::invalid_argument("bound fit needs at least 3 points");
  }
  std::set<double> eps;
  for (const auto& [e, y] : points) {
    if (!std::isfinite(e) || !std::isfinite(y)) {
      throw std::invalid_argument("bound fit points must be finite");
    }
    if (!eps.insert(e).second) {
      throw std::invalid_argument("bound fit needs distinct epsilon values");
    }
  }
  const auto n = static_cast<double>(points.size());
  auto mse = [&](const std::vector<double>& p) {
    double total = 0.0;
    for (const auto& [e, y] : points) {
      const double r = BoundCurve(e, p[0], p[1], p[2]) - y;
      total += r * r;
    }
    return total / n;
  };
  auto step_for = [](const std::vector<double>& x) {
    std::vector<double> s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = 0.5 * std::abs(x[i]) + 0.1;
    return s;
  };
  constexpr double kFtol = 1e-15;
  constexpr int kMaxEvals = 20000;

  SimplexResult best;
  best.value = HUGE_VAL;
  for (double s : {0.1, 1.0, 10.0}) {
    for (double l : {0.1, 1.0, 10.0}) {
      for (double c : {-1.0, 0.0, 1.0}) {
        std::vector<double> start{s, l, c};
        SimplexResult r = NelderMead(mse, start, step_for(start), kFtol, kMaxEvals);
        if (r.value < best.value) best = std::move(r);
      }
    }
  }
  // Restarting from the best vertex recovers from premature collapse.
  bool converged = false;
  for (int restart = 0; restart < 50; ++restart) {
    SimplexResult r = NelderMead(mse, best.x, step_for(best.x), kFtol, kMaxEvals);
    const bool improved = r.value < best.value * (1.0 - 1e-9);
    if (r.value < best.value) best = std::move(r);
    if (!improved && best.converged) {
      converged = true;
      break;
    }
  }

  FitResult out;
  out.s_f = best.x[0];
  out.L_f = best.x[1];
  out.c_f = best.x[2];
  out.residual = std::sqrt(best.value);
  out.converged = converged;
  const double y0 = points.front().second;
  out.identifiable = std::any_of(points.begin(), points.end(),
                                 [&](const auto& p) { return p.second != y0; });
  return out;
}

KlSummary EmpiricalKlReport(std::span<const GaussianPair> pairs) {
  KlSummary out;
  out.count = pairs.size();
  if (pairs.empty()) return out;
  std::vector<double> kl;
  kl.reserve(pairs.size());
  for (const GaussianPair& p : pairs) {
    const double s = p.PooledSigma();
    kl.push_back(KlGaussian(p.mu_in, s, p.mu_out, s));
  }
  std::sort(kl.begin(), kl.end());
  double total = 0.0;
  for (double v : kl) total += v;
  out.mean = total / static_cast<double>(kl.size());
  const std::size_t mid = kl.size() / 2;
  out.median = kl.size() % 2 ? kl[mid] : 0.5 * (kl[mid - 1] + kl[mid]);
  out.max = kl.back();
  return out;
}

}  // namespace curvmia
