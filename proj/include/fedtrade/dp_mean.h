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

// Mean estimation where every client releases its local mean through a
// Gaussian mechanism.

#ifndef FEDTRADE_DP_MEAN_H_
#define FEDTRADE_DP_MEAN_H_

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fedtrade/core.h"
#include "fedtrade/feasibility.h"
#include "fedtrade/noise_allocation.h"

namespace fedtrade::dp_mean {

template <typename Scalar>
struct BasicSetting {
  int n_clients = 1;
  long n_samples = 1;
  Scalar sigma = Scalar(1);
  Scalar support_width = Scalar(1);

  void Validate() const {
    if (n_clients < 1) throw std::domain_error("dp_mean: n_clients < 1");
    if (n_samples < 1) throw std::domain_error("dp_mean: n_samples < 1");
    if (!(sigma > Scalar(0))) throw std::domain_error("dp_mean: sigma <= 0");
    if (!(support_width >= Scalar(0))) {
      throw std::domain_error("dp_mean: support_width < 0");
    }
  }
};

template <typename Scalar>
struct BasicDerived {
  Scalar rho;
  Scalar kappa;
};

using Setting = BasicSetting<double>;
using Derived = BasicDerived<double>;

template <typename Scalar>
BasicDerived<Scalar> Derive(const BasicSetting<Scalar>& s) {
  using std::log;
  using std::sqrt;
  s.Validate();
  const Scalar n(s.n_samples);
  BasicDerived<Scalar> d;
  d.rho = n / (s.sigma * s.sigma);
  d.kappa = sqrt(Scalar(2) * log(Scalar(1.25) * n * n)) * s.support_width / n;
  return d;
}

template <typename Scalar>
Scalar Zeta(const Scalar& lambda, const BasicDerived<Scalar>& d) {
  if (lambda <= Scalar(0)) return Scalar(0);
  return lambda / (lambda + d.kappa * d.kappa * d.rho * d.rho);
}

// kappa^2 / alpha^2 written through beta: kappa^2 rho beta / (rho - beta).
template <typename Scalar>
Scalar LeakSquaredOfBeta(const Scalar& beta, const BasicDerived<Scalar>& d) {
  if (d.kappa == Scalar(0) || beta <= Scalar(0)) return Scalar(0);
  if (beta >= d.rho) return Infinity<Scalar>();
  return d.kappa * d.kappa * d.rho * beta / (d.rho - beta);
}

template <typename Scalar>
BasicEvalPair<Scalar> ErrLeak(const BasicSetting<Scalar>& s,
                              const BasicDerived<Scalar>& d,
                              const BasicNoiseAllocation<Scalar>& alloc,
                              Eigen::Index i) {
  using std::sqrt;
  if (alloc.size() != s.n_clients) {
    throw std::domain_error("dp_mean::ErrLeak: allocation length mismatch");
  }
  if (i < 0 || i >= alloc.size()) throw std::out_of_range("client index");
  BasicEvalPair<Scalar> e;
  e.err = sqrt(Scalar(1) / (alloc.GammaExcluding(i) + d.rho));
  const Scalar alpha = alloc.alphas()[i];
  if (d.kappa == Scalar(0)) {
    e.leak = Scalar(0);
  } else if (alpha == Scalar(0)) {
    e.leak = Infinity<Scalar>();
  } else {
    e.leak = d.kappa / alpha;  // 0 when alpha is infinite
  }
  return e;
}

// Residuals are the participation slack u_i - u0_i in the form
// -k^2 rho b_i / (rho - b_i) + l_i g_i / (rho (g_i + rho)).
template <typename Scalar>
BasicParticipationReport<Scalar> Utilities(
    const BasicSetting<Scalar>& s, const BasicDerived<Scalar>& d,
    const BasicNoiseAllocation<Scalar>& alloc,
    const std::vector<BasicClientPreference<Scalar>>& prefs) {
  const Eigen::Index n = alloc.size();
  if (n != s.n_clients || static_cast<Eigen::Index>(prefs.size()) != n) {
    throw std::domain_error("dp_mean::Utilities: length mismatch");
  }
  Vector<Scalar> u(n), u0(n), res(n);
  const Scalar gamma_all = alloc.Gamma();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar lambda = prefs[i].lambda;
    const Scalar beta = alloc.betas()[i];
    const Scalar gi = gamma_all - beta;
    const Scalar leak2 = LeakSquaredOfBeta(beta, d);
    u[i] = -leak2 - lambda / (gi + d.rho);
    u0[i] = -lambda / d.rho;
    res[i] = -leak2 + lambda * gi / (d.rho * (gi + d.rho));
  }
  auto report = CheckParticipation<Scalar>(u, u0);
  report.residuals = std::move(res);
  return report;
}

template <typename Scalar>
BasicFeasibilityReport<Scalar> Existence(
    const BasicSetting<Scalar>& s, const BasicDerived<Scalar>& d,
    const std::vector<BasicClientPreference<Scalar>>& prefs) {
  if (static_cast<int>(prefs.size()) != s.n_clients) {
    throw std::domain_error("dp_mean::Existence: length mismatch");
  }
  BasicFeasibilityReport<Scalar> r;
  r.coefficients.resize(s.n_clients);
  for (int i = 0; i < s.n_clients; ++i) {
    r.coefficients[i] = Zeta(prefs[i].lambda, d);
  }
  r.coefficient_sum = r.coefficients.sum();
  r.feasible = r.coefficient_sum > Scalar(1);
  if (r.feasible) {
    r.witness_b_max = (Scalar(1) - Scalar(1) / r.coefficient_sum) * d.rho;
    r.witness_b = r.witness_b_max / Scalar(2);
    r.witness_betas = Vector<Scalar>(r.coefficients * r.witness_b);
  }
  return r;
}

// Gain of the symmetric protocol where every client uses informativeness beta.
template <typename Scalar>
Scalar SymmetricGain(const BasicDerived<Scalar>& d, int n_clients,
                     const Scalar& lambda, const Scalar& beta) {
  const Scalar m(n_clients - 1);
  return -LeakSquaredOfBeta(beta, d) +
         m * lambda * beta / (d.rho * (m * beta + d.rho));
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
BasicSymmetricOptimum<Scalar> SymmetricOptimumOf(const BasicSetting<Scalar>& s,
                                                 const BasicDerived<Scalar>& d,
                                                 const Scalar& lambda) {
  using std::sqrt;
  BasicSymmetricOptimum<Scalar> out;
  if (s.n_clients < 2 || lambda <= Scalar(0)) return out;
  const Scalar n(s.n_clients);
  const Scalar m = n - Scalar(1);
  const Scalar kr = d.kappa * d.rho;
  if (!(m * lambda > kr * kr)) return out;
  const Scalar root = sqrt(m * lambda);
  out.profitable = true;
  out.alpha_sq_star = n * d.kappa / (root - kr);
  out.beta_star = (root - kr) * d.rho / (root + m * kr);
  out.gain = (root - kr) * (root - kr) / (n * d.rho);
  return out;
}

// Largest b on a uniform grid whose family allocation is mutually beneficial.
template <typename Scalar>
GammaSearchResult MaximizeGamma(
    const BasicSetting<Scalar>& s, const BasicDerived<Scalar>& d,
    const std::vector<BasicClientPreference<Scalar>>& prefs, Family family,
    int grid_points) {
  if (grid_points < 2) throw std::domain_error("grid_points must be >= 2");
  const int n = s.n_clients;
  VectorXd direction(n);
  double b_max = 0.0;
  if (family == Family::kSymmetric) {
    direction.setOnes();
    b_max = static_cast<double>(d.rho);
  } else {
    for (int i = 0; i < n; ++i) {
      direction[i] = static_cast<double>(Zeta(prefs[i].lambda, d));
    }
    const double zmax = direction.maxCoeff();
    if (!(zmax > 0.0)) return {};
    b_max = static_cast<double>(d.rho) / zmax;
  }
  return ScanRay(direction, b_max, static_cast<double>(d.rho), grid_points,
                 [&](const VectorXd& betas) {
                   const auto alloc = BasicNoiseAllocation<Scalar>::FromBetas(
                       d.rho, betas.cast<Scalar>());
                   return Utilities(s, d, alloc, prefs).beneficial();
                 });
}

}  // namespace fedtrade::dp_mean

#endif  // FEDTRADE_DP_MEAN_H_
