// Copyright 2026 The Fedtrade Authors
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

// Collaborative projected SGD on a strongly convex objective with shuffled
// Gaussian gradient noise.

#ifndef FEDTRADE_DP_SGD_H_
#define FEDTRADE_DP_SGD_H_

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fedtrade/core.h"
#include "fedtrade/feasibility.h"
#include "fedtrade/noise_allocation.h"

namespace fedtrade::dp_sgd {

template <typename Scalar>
struct BasicSetting {
  int n_clients = 1;
  long n_samples = 1;
  int dim = 1;
  Scalar smoothness = Scalar(1);
  Scalar strong_convexity = Scalar(1);
  Scalar diameter = Scalar(1);
  Scalar sigma = Scalar(1);
  Scalar grad_support = Scalar(1);

  void Validate() const {
    if (n_clients < 1 || n_samples < 1 || dim < 1) {
      throw std::domain_error("dp_sgd: counts must be >= 1");
    }
    if (!(smoothness > Scalar(0)) || !(strong_convexity > Scalar(0)) ||
        !(diameter > Scalar(0)) || !(sigma > Scalar(0)) ||
        !(grad_support > Scalar(0))) {
      throw std::domain_error("dp_sgd: constants must be positive");
    }
    if (strong_convexity > smoothness) {
      throw std::domain_error("dp_sgd: strong_convexity exceeds smoothness");
    }
  }
};

template <typename Scalar>
struct BasicDerived {
  int n_clients = 1;
  int dim = 1;
  Scalar smoothness;
  Scalar strong_convexity;
  Scalar chi;
  Scalar y0;
  Scalar rounds;  // continuous T
  Scalar batch;   // n / T
  Scalar rho;
  Scalar kappa;
  Vector<Scalar> psi;

  Scalar LMu() const { return smoothness * strong_convexity; }
};

using Setting = BasicSetting<double>;
using Derived = BasicDerived<double>;

template <typename Scalar>
BasicDerived<Scalar> Derive(
    const BasicSetting<Scalar>& s,
    const std::vector<BasicClientPreference<Scalar>>& prefs) {
  using std::log;
  using std::max;
  using std::sqrt;
  s.Validate();
  if (static_cast<int>(prefs.size()) != s.n_clients) {
    throw std::domain_error("dp_sgd::Derive: preference count mismatch");
  }
  BasicDerived<Scalar> d;
  const Scalar n(s.n_samples);
  d.n_clients = s.n_clients;
  d.dim = s.dim;
  d.smoothness = s.smoothness;
  d.strong_convexity = s.strong_convexity;
  d.chi = s.strong_convexity / s.smoothness;
  d.y0 = s.smoothness * s.strong_convexity * n * Scalar(s.n_clients) *
         s.diameter * s.diameter / (s.sigma * s.sigma);
  d.rounds = max(-log(d.y0) / log(Scalar(1) - d.chi / Scalar(2)), Scalar(1));
  d.batch = n / d.rounds;
  d.rho = d.batch / (s.sigma * s.sigma);
  const Scalar e(std::numbers::e);
  d.kappa = Scalar(16) *
            sqrt(Scalar(2) * e * log(Scalar(1.25) * d.rounds * n * n) *
                 log(Scalar(4) * n * n) * d.rounds) *
            s.grad_support / n;
  d.psi.resize(s.n_clients);
  const Scalar scale =
      d.LMu() * Scalar(s.dim) * d.kappa * d.kappa * d.rho * d.rho;
  for (int i = 0; i < s.n_clients; ++i) {
    d.psi[i] = max(prefs[i].lambda, Scalar(0)) / scale;
  }
  return d;
}

// Upper bound on E||w^m - w*||^2 after m rounds. Infinite when Gamma = 0.
template <typename Scalar>
Scalar AccuracyBound(const BasicDerived<Scalar>& d, const Scalar& gamma,
                     const Scalar& m) {
  using std::pow;
  if (!(gamma > Scalar(0))) return Infinity<Scalar>();
  if (m >= d.rounds) {
    return Scalar(1) /
           ((Scalar(1) + d.chi / (Scalar(2) - d.chi) * (m - d.rounds)) *
            d.LMu() * gamma);
  }
  return pow(Scalar(1) - d.chi / Scalar(2), m) * d.y0 / (d.LMu() * gamma);
}

template <typename Scalar>
Scalar AccuracyBound(const BasicDerived<Scalar>& d,
                     const BasicNoiseAllocation<Scalar>& alloc,
                     const Scalar& m) {
  if (alloc.dim() != d.dim) {
    throw std::domain_error("dp_sgd::AccuracyBound: allocation dim mismatch");
  }
  return AccuracyBound(d, alloc.Gamma(), m);
}

// kappa^2 / alpha^2 through beta.
template <typename Scalar>
Scalar LeakSquaredOfBeta(const Scalar& beta, const BasicDerived<Scalar>& d) {
  if (beta <= Scalar(0)) return Scalar(0);
  if (beta >= d.rho) return Infinity<Scalar>();
  return d.kappa * d.kappa * d.rho * beta * Scalar(d.dim) / (d.rho - beta);
}

template <typename Scalar>
BasicEvalPair<Scalar> ErrLeak(const BasicDerived<Scalar>& d,
                              const BasicNoiseAllocation<Scalar>& alloc,
                              Eigen::Index i) {
  using std::sqrt;
  BasicEvalPair<Scalar> e;
  e.err = sqrt(AccuracyBound(d, alloc.Gamma(), d.rounds));
  const Scalar alpha = alloc.alphas()[i];
  e.leak = alpha == Scalar(0) ? Infinity<Scalar>() : d.kappa / alpha;
  return e;
}

// Residuals are psi_i (1 - rho / Gamma) - beta_i / (rho - beta_i), which is
// (u_i - u0_i) / (kappa^2 rho d). With Gamma = 0 nobody collaborates and the
// status quo is kept: u_i = u0_i.
template <typename Scalar>
BasicParticipationReport<Scalar> Utilities(
    const BasicDerived<Scalar>& d, const BasicNoiseAllocation<Scalar>& alloc,
    const std::vector<BasicClientPreference<Scalar>>& prefs) {
  const Eigen::Index n = alloc.size();
  if (n != d.n_clients || static_cast<Eigen::Index>(prefs.size()) != n) {
    throw std::domain_error("dp_sgd::Utilities: length mismatch");
  }
  if (alloc.dim() != d.dim) {
    throw std::domain_error("dp_sgd::Utilities: allocation dim mismatch");
  }
  Vector<Scalar> u(n), u0(n), res(n);
  const Scalar gamma = alloc.Gamma();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar lambda = prefs[i].lambda;
    const Scalar beta = alloc.betas()[i];
    u0[i] = -lambda / (d.LMu() * d.rho);
    if (!(gamma > Scalar(0))) {
      u[i] = u0[i];
      res[i] = Scalar(0);
      continue;
    }
    u[i] = -LeakSquaredOfBeta(beta, d) - lambda / (d.LMu() * gamma);
    const Scalar own = beta >= d.rho ? Infinity<Scalar>() : beta / (d.rho - beta);
    res[i] = d.psi[i] * (Scalar(1) - d.rho / gamma) - own;
  }
  auto report = CheckParticipation<Scalar>(u, u0);
  report.residuals = std::move(res);
  return report;
}

template <typename Scalar>
Scalar G(const Vector<Scalar>& psi, const Scalar& x) {
  Scalar s(0);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    s += psi[i] * x / ((psi[i] + Scalar(1)) * x + Scalar(1));
  }
  return s - x - Scalar(1);
}

// Slack allowed on max g when deciding the non-strict boundary case.
inline constexpr double kBoundaryTolerance = 1e-12;

template <typename Scalar>
struct BasicExistenceReport {
  BasicFeasibilityReport<Scalar> base;
  Scalar x_star = Scalar(0);
  Scalar g_max = Scalar(0);
  bool sufficient_test = false;  // sum psi/(psi+2) >= 2
  bool necessary_test = false;   // sum psi/sqrt(psi+1) >= 4
};

using ExistenceReport = BasicExistenceReport<double>;

template <typename Scalar>
BasicExistenceReport<Scalar> Existence(const BasicDerived<Scalar>& d) {
  using std::sqrt;
  BasicExistenceReport<Scalar> r;
  const Vector<Scalar>& psi = d.psi;
  const Scalar upper(psi.size());
  auto [x, g] = TernarySearchMax<Scalar>(
      [&](const Scalar& t) { return G(psi, t); }, Scalar(0), upper);
  r.x_star = x;
  r.g_max = g;
  Scalar suff(0), nec(0);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    suff += psi[i] / (psi[i] + Scalar(2));
    nec += psi[i] / sqrt(psi[i] + Scalar(1));
  }
  r.sufficient_test = suff >= Scalar(2);
  r.necessary_test = nec >= Scalar(4);
  r.base.coefficients = psi;
  r.base.coefficient_sum = psi.sum();
  r.base.feasible = g >= -Scalar(kBoundaryTolerance);
  if (r.base.feasible) {
    Vector<Scalar> betas(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      betas[i] = d.rho * psi[i] * x / ((psi[i] + Scalar(1)) * x + Scalar(1));
    }
    r.base.witness_b = x;
    r.base.witness_betas = betas;
  }
  return r;
}

template <typename Scalar>
Scalar SymmetricGain(const BasicDerived<Scalar>& d, const Scalar& lambda,
                     const Scalar& beta) {
  if (beta <= Scalar(0)) return Scalar(0);
  const Scalar n(d.n_clients);
  const Scalar psi =
      lambda / (d.LMu() * Scalar(d.dim) * d.kappa * d.kappa * d.rho * d.rho);
  const Scalar own = beta >= d.rho ? Infinity<Scalar>() : beta / (d.rho - beta);
  return d.kappa * d.kappa * d.rho * Scalar(d.dim) *
         (psi * (Scalar(1) - d.rho / (n * beta)) - own);
}

template <typename Scalar>
struct BasicSymmetricOptimum {
  bool profitable = false;
  std::optional<Scalar> alpha_sq_star;
  Scalar beta_star = Scalar(0);
  Scalar gain = Scalar(0);
};

using SymmetricOptimum = BasicSymmetricOptimum<double>;

template <typename Scalar>
BasicSymmetricOptimum<Scalar> SymmetricOptimumOf(const BasicDerived<Scalar>& d,
                                                 const Scalar& lambda) {
  using std::sqrt;
  BasicSymmetricOptimum<Scalar> out;
  if (d.n_clients < 2 || lambda <= Scalar(0)) return out;
  const Scalar n(d.n_clients);
  const Scalar m = n - Scalar(1);
  const Scalar dd(d.dim);
  const Scalar lhs = sqrt(m * lambda);
  const Scalar rhs = sqrt(Scalar(4) * n * d.LMu() * dd / m) * d.kappa * d.rho;
  if (!(lhs >= rhs)) return out;
  out.profitable = true;
  out.alpha_sq_star = sqrt(d.LMu() * n) * d.kappa / sqrt(lambda * dd);
  const Scalar psi = lambda / (d.LMu() * dd * d.kappa * d.kappa * d.rho * d.rho);
  out.beta_star = sqrt(psi) * d.rho / (sqrt(psi) + sqrt(n));
  out.gain = lhs / (d.LMu() * d.rho * n) * (lhs - rhs);
  return out;
}

}  // namespace fedtrade::dp_sgd

#endif  // FEDTRADE_DP_SGD_H_
