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

#ifndef CURVMIA_THEORY_H_
#define CURVMIA_THEORY_H_

// Closed-form privacy / curvature bounds and their empirical counterparts.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "curvmia/attack.h"
#include "curvmia/nn.h"

namespace curvmia {

// Loss ceiling implied by the probability clamp: -ln(kProbClip).
inline const double kDefaultLossBound = -std::log(kProbClip);

struct BoundInputs {
  double epsilon = 1.0;     // DP parameter, >= 0
  double m = 2.0;           // training-set size, >= 2 (real-valued so the
                            // crossover can be probed between integers)
  double L = kDefaultLossBound;  // loss bound, > 0
  double sigma = 1.0;       // std of the conditional score model, > 0
  double gamma = 0.0;       // generalization rate, >= 0
  double delta_bias = 0.0;  // model-bias bound, >= 0
  double rho_term = 0.0;    // (rho / 6) E||alpha||^3, >= 0
  double delta_conf = 0.05; // confidence parameter, in (0, 1)

  void Validate() const;
  // L (1 - e^-eps)
  double Beta() const;
  // (4m - 1) gamma + 2 (m - 1) delta_bias + rho_term
  double C1() const;
  // C1() + L
  double C() const;
};

// KL(N(mu1, s1^2) || N(mu2, s2^2)).
double KlGaussian(double mu1, double s1, double mu2, double s2);

// Output-probability KL bound: epsilon.
double Theorem1Bound(double epsilon);

// Curvature KL bound: [L m (1 - e^-eps) + c]^2 / (2 sigma^2), c = C().
double Theorem2Bound(const BoundInputs& b);

// Upper bound on the expected curvature: L (m (1 - e^-eps) + 1) + C1().
double LemmaCurvUpper(const BoundInputs& b);

// (sqrt(2 sigma^2 eps) - c) / (L (1 - e^-eps)). Raw value: negative or < 2
// means the condition holds for every admissible m. Throws for eps == 0.
double Theorem3CrossoverM(const BoundInputs& b, double c);

// y = s (L (1 - e^-eps) + c)^2
double BoundCurve(double epsilon, double s, double L, double c);

struct FitResult {
  double s_f = 0.0;
  double L_f = 0.0;
  double c_f = 0.0;
  double residual = 0.0;  // root-mean-square misfit
  bool converged = false;
  // False when all y are equal: only s_f * c_f^2 is determined.
  bool identifiable = true;
};

// Least squares by Nelder-Mead from the start grid
// s in {0.1, 1, 10} x L in {0.1, 1, 10} x c in {-1, 0, 1}, then restarts
// from the best vertex until the objective stops improving. Throws for
// fewer than 3 points or repeated epsilon values.
FitResult FitBoundCurve(std::span<const std::pair<double, double>> points);

// Derivative-free minimizer used by FitBoundCurve.
struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};
template <typename Fn>
SimplexResult NelderMead(Fn&& f, std::vector<double> start,
                         std::vector<double> step, double ftol,
                         int max_evaluations);

struct KlSummary {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Per-example KlGaussian(mu_in, s, mu_out, s) with s = pair.PooledSigma().
KlSummary EmpiricalKlReport(std::span<const GaussianPair> pairs);

// ---------------------------------------------------------------------------

template <typename Fn>
SimplexResult NelderMead(Fn&& f, std::vector<double> start,
                         std::vector<double> step, double ftol,
                         int max_evaluations) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : HUGE_VAL;
  };
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  bool converged = false;
  while (evals < max_evaluations) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    if (std::abs(vals[worst] - vals[best]) <=
        ftol * (std::abs(vals[best]) + ftol)) {
      converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / n;
    }
    for (std::size_t k = 0; k < n; ++k) {
      trial[k] = centroid[k] + (centroid[k] - pts[worst][k]);
    }
    const double fr = eval(trial);
    if (fr < vals[best]) {
      for (std::size_t k = 0; k < n; ++k) {
        trial2[k] = centroid[k] + 2.0 * (centroid[k] - pts[worst][k]);
      }
      const double fe = eval(trial2);
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    for (std::size_t k = 0; k < n; ++k) {
      trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k])
                          : centroid[k] + 0.5 * (pts[worst][k] - centroid[k]);
    }
    const double fc = eval(trial2);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) {
        pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      }
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return {pts[static_cast<std::size_t>(it - vals.begin())], *it, evals,
          converged};
}

}  // namespace curvmia

#endif  // CURVMIA_THEORY_H_
