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

// Bayesian mean estimation under a Gaussian prior, with privacy measured by
// how well an attacker reconstructs a client's raw data.

#ifndef FEDTRADE_BAYES_MEAN_H_
#define FEDTRADE_BAYES_MEAN_H_

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fedtrade/core.h"
#include "fedtrade/feasibility.h"
#include "fedtrade/noise_allocation.h"

namespace fedtrade::bayes_mean {

template <typename Scalar>
struct BasicSetting {
  int n_clients = 1;
  long n_samples = 1;
  Scalar sigma = Scalar(1);
  Scalar tau = Scalar(1);

  Scalar Rho() const { return Scalar(n_samples) / (sigma * sigma); }

  void Validate() const {
    if (n_clients < 1 || n_samples < 1) {
      throw std::domain_error("bayes_mean: counts must be >= 1");
    }
    if (!(sigma > Scalar(0)) || !(tau > Scalar(0))) {
      throw std::domain_error("bayes_mean: sigma and tau must be positive");
    }
  }
};

using Setting = BasicSetting<double>;

// Squared reconstruction leak for a client with informativeness beta when the
// others sum to gamma. Equals 1/rho + 1/tau - 1/(1/alpha^2 + q) with
// q = rho (gamma + tau) / (gamma + rho + tau), rearranged without
// cancellation.
template <typename Scalar>
Scalar LeakSquared(const Scalar& rho, const Scalar& tau, const Scalar& beta,
                   const Scalar& gamma) {
  const Scalar q = rho * (gamma + tau) / (gamma + rho + tau);
  const Scalar others = gamma / (tau * (gamma + tau));
  if (beta <= Scalar(0)) return others;
  if (beta >= rho) return others + Scalar(1) / q;
  const Scalar a = rho * beta / (rho - beta);  // 1 / alpha^2
  return others + a / (q * (a + q));
}

template <typename Scalar>
BasicEvalPair<Scalar> ErrLeak(const BasicSetting<Scalar>& s,
                              const BasicNoiseAllocation<Scalar>& alloc,
                              Eigen::Index i) {
  using std::sqrt;
  if (alloc.size() != s.n_clients) {
    throw std::domain_error("bayes_mean::ErrLeak: allocation length mismatch");
  }
  if (i < 0 || i >= alloc.size()) throw std::out_of_range("client index");
  const Scalar rho = s.Rho();
  const Scalar gamma = alloc.GammaExcluding(i);
  BasicEvalPair<Scalar> e;
  e.err = sqrt(Scalar(1) / (gamma + rho + s.tau));
  e.leak = sqrt(LeakSquared(rho, s.tau, alloc.betas()[i], gamma));
  return e;
}

// u_i - u0_i rearranged to avoid the O(1) cancellations near beta = 0.
template <typename Scalar>
Scalar Residual(const Scalar& rho, const Scalar& tau, const Scalar& lambda,
                const Scalar& beta, const Scalar& gamma_all) {
  const Scalar g = gamma_all - beta;
  return (tau * beta * (beta - Scalar(2) * rho) - gamma_all * rho * rho) /
             (tau * (gamma_all + tau) * rho * rho) -
         beta / (rho * rho) +
         lambda * g / ((rho + tau) * (g + rho + tau));
}

template <typename Scalar>
BasicParticipationReport<Scalar> Utilities(
    const BasicSetting<Scalar>& s, const BasicNoiseAllocation<Scalar>& alloc,
    const std::vector<BasicClientPreference<Scalar>>& prefs) {
  const Eigen::Index n = alloc.size();
  if (n != s.n_clients || static_cast<Eigen::Index>(prefs.size()) != n) {
    throw std::domain_error("bayes_mean::Utilities: length mismatch");
  }
  const Scalar rho = s.Rho();
  const Scalar gamma_all = alloc.Gamma();
  Vector<Scalar> u(n), u0(n), res(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar lambda = prefs[i].lambda;
    const Scalar beta = alloc.betas()[i];
    const Scalar g = gamma_all - beta;
    u[i] = -LeakSquared(rho, s.tau, beta, g) - lambda / (g + rho + s.tau);
    u0[i] = -lambda / (rho + s.tau);
    res[i] = Residual(rho, s.tau, lambda, beta, gamma_all);
  }
  auto report = CheckParticipation<Scalar>(u, u0);
  report.residuals = std::move(res);
  return report;
}

template <typename Scalar>
Scalar Xi(const Scalar& lambda, const Scalar& rho, const Scalar& tau) {
  const Scalar c = lambda / ((rho + tau) * (rho + tau)) - Scalar(1) / (tau * tau);
  const Scalar k = (rho + tau) * (rho + tau) / (rho * rho * tau * tau);
  return c / (c + k);
}

template <typename Scalar>
BasicFeasibilityReport<Scalar> FirstOrderExistence(
    const BasicSetting<Scalar>& s,
    const std::vector<BasicClientPreference<Scalar>>& prefs) {
  s.Validate();
  if (static_cast<int>(prefs.size()) != s.n_clients) {
    throw std::domain_error("bayes_mean::FirstOrderExistence: length mismatch");
  }
  const Scalar rho = s.Rho();
  BasicFeasibilityReport<Scalar> r;
  r.coefficients.resize(s.n_clients);
  for (int i = 0; i < s.n_clients; ++i) {
    r.coefficients[i] = Xi(prefs[i].lambda, rho, s.tau);
  }
  r.coefficient_sum = r.coefficients.sum();
  r.feasible = r.coefficients.minCoeff() >= Scalar(0) &&
               r.coefficient_sum > Scalar(1);
  if (!r.feasible) return r;
  r.witness_b_max = rho / r.coefficients.maxCoeff();
  Scalar b = r.witness_b_max;
  for (int halving = 0; halving < 200; ++halving) {
    const auto alloc = BasicNoiseAllocation<Scalar>::FromBetas(
        rho, Vector<Scalar>((r.coefficients * b).cwiseMin(rho)));
    const auto rep = Utilities(s, alloc, prefs);
    if (rep.residuals.minCoeff() >= Scalar(0)) {
      r.witness_b = b;
      r.witness_betas = alloc.betas();
      break;
    }
    b /= Scalar(2);
  }
  return r;
}

// Symmetric gain h(beta) and its first two derivatives.
template <typename Scalar>
struct SymmetricGainFunction {
  Scalar rho, tau, lambda;
  int n_clients;

  Scalar N() const { return Scalar(n_clients); }
  Scalar A() const { return (rho + tau / N()) * (rho + tau / N()); }
  Scalar C1() const { return (rho + tau) / (N() - Scalar(1)); }

  Scalar operator()(const Scalar& b) const {
    const Scalar n = N();
    return -(n - Scalar(1)) * b / (n * rho * rho) - A() / (tau * rho * rho) +
           lambda / (rho + tau) + A() / (n * rho * rho * (b + tau / n)) -
           lambda / ((n - Scalar(1)) * (b + C1()));
  }
  Scalar D1(const Scalar& b) const {
    const Scalar n = N();
    const Scalar u = b + tau / n;
    const Scalar v = b + C1();
    return -(n - Scalar(1)) / (n * rho * rho) - A() / (n * rho * rho * u * u) +
           lambda / ((n - Scalar(1)) * v * v);
  }
  Scalar D2(const Scalar& b) const {
    const Scalar n = N();
    const Scalar u = b + tau / n;
    const Scalar v = b + C1();
    return Scalar(2) * A() / (n * rho * rho * u * u * u) -
           Scalar(2) * lambda / ((n - Scalar(1)) * v * v * v);
  }
};

template <typename Scalar>
Scalar SymmetricGain(const BasicSetting<Scalar>& s, const Scalar& lambda,
                     const Scalar& beta) {
  return SymmetricGainFunction<Scalar>{s.Rho(), s.tau, lambda, s.n_clients}(
      beta);
}

inline constexpr double kRootTolerance = 1e-10;

template <typename Scalar>
struct BasicSymmetricOptimum {
  int case_id = 5;  // 1..5
  Scalar beta_star = Scalar(0);
  Scalar gain = Scalar(0);
  std::optional<Scalar> beta_test;  // sign change of h''
};

using SymmetricOptimum = BasicSymmetricOptimum<double>;

// Classifies h by the signs of h' at the ends of [0, rho] and at the single
// sign change of h''. Candidates are 0, rho and the roots of h' on the two
// pieces where h' is monotone; beta* is the best of them.
template <typename Scalar>
BasicSymmetricOptimum<Scalar> SymmetricOptimumOf(const BasicSetting<Scalar>& s,
                                                 const Scalar& lambda) {
  s.Validate();
  BasicSymmetricOptimum<Scalar> out;
  if (s.n_clients < 2) return out;
  const Scalar rho = s.Rho();
  const Scalar tol(kRootTolerance);
  const SymmetricGainFunction<Scalar> h{rho, s.tau, lambda, s.n_clients};
  auto d1 = [&](const Scalar& b) { return h.D1(b); };
  auto d2 = [&](const Scalar& b) { return h.D2(b); };

  const Scalar d2_lo = h.D2(Scalar(0));
  const Scalar d2_hi = h.D2(rho);
  std::vector<Scalar> breaks = {Scalar(0)};
  if ((d2_lo > Scalar(0)) != (d2_hi > Scalar(0))) {
    out.beta_test = Bisect<Scalar>(d2, Scalar(0), rho, tol);
    breaks.push_back(*out.beta_test);
  }
  breaks.push_back(rho);

  std::vector<Scalar> candidates = {Scalar(0), rho};
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    const Scalar lo = breaks[k], hi = breaks[k + 1];
    const Scalar f_lo = h.D1(lo), f_hi = h.D1(hi);
    // Only roots where h' goes from + to - are maxima.
    if (f_lo > Scalar(0) && f_hi <= Scalar(0)) {
      candidates.push_back(Bisect<Scalar>(d1, lo, hi, tol));
    }
  }
  Scalar best_b(0), best_h(0);
  for (const Scalar& c : candidates) {
    const Scalar v = c == Scalar(0) ? Scalar(0) : h(c);
    if (v > best_h) {
      best_h = v;
      best_b = c;
    }
  }
  out.beta_star = best_b;
  out.gain = best_h;

  const bool pos0 = h.D1(Scalar(0)) > Scalar(0);
  const bool pos_rho = h.D1(rho) > Scalar(0);
  if (pos0 && pos_rho) {
    out.case_id = 1;
  } else if (!pos0 && pos_rho) {
    out.case_id = 2;
  } else if (pos0 && !pos_rho) {
    out.case_id = 3;
  } else if (out.beta_test && h.D1(*out.beta_test) > Scalar(0)) {
    out.case_id = 4;
  } else {
    out.case_id = 5;
  }
  return out;
}

// Thresholds on lambda for the symmetric protocol.
template <typename Scalar>
Scalar UnprofitableBelow(const BasicSetting<Scalar>& s) {
  const Scalar rho = s.Rho(), n(s.n_clients);
  return (n * rho + s.tau) * (n * rho + s.tau) /
         ((n - Scalar(1)) * (n - Scalar(1)) * rho * rho);
}

template <typename Scalar>
Scalar AlwaysProfitableAbove(const BasicSetting<Scalar>& s) {
  const Scalar rho = s.Rho(), t = s.tau, n(s.n_clients);
  return (n * rho * rho + Scalar(2) * rho * t + t * t) * (rho + t) * (rho + t) /
         ((n - Scalar(1)) * rho * rho * t * t);
}

enum class Regime { kLargeN, kLargeRho, kSmallRho };

struct AsymptoticPrediction {
  bool decided = true;
  bool collaborate = false;
  std::optional<double> beta_approx;
  std::optional<double> gain_approx;
};

inline AsymptoticPrediction AsymptoticBeta(const Setting& s, double lambda,
                                           Regime regime) {
  AsymptoticPrediction p;
  if (regime != Regime::kLargeN) return p;
  const double rho = s.Rho();
  const double threshold = (rho + s.tau) / s.tau;
  if (lambda == threshold) {
    p.decided = false;
    return p;
  }
  if (lambda < threshold) return p;
  p.collaborate = true;
  p.beta_approx = std::sqrt((lambda - 1.0) / s.n_clients) * rho;
  p.gain_approx = lambda / (rho + s.tau) - 1.0 / s.tau;
  return p;
}

template <typename Scalar>
GammaSearchResult MaximizeGamma(
    const BasicSetting<Scalar>& s,
    const std::vector<BasicClientPreference<Scalar>>& prefs, Family family,
    int grid_points) {
  if (grid_points < 2) throw std::domain_error("grid_points must be >= 2");
  s.Validate();
  const int n = s.n_clients;
  const double rho = static_cast<double>(s.Rho());
  VectorXd direction(n);
  double b_max = 0.0;
  if (family == Family::kSymmetric) {
    direction.setOnes();
    b_max = rho;
  } else {
    for (int i = 0; i < n; ++i) {
      direction[i] = std::max(
          static_cast<double>(Xi(prefs[i].lambda, s.Rho(), s.tau)), 0.0);
    }
    const double xmax = direction.maxCoeff();
    if (!(xmax > 0.0)) return {};
    b_max = rho / xmax;
  }
  return ScanRay(direction, b_max, rho, grid_points, [&](const VectorXd& b) {
    const auto alloc =
        BasicNoiseAllocation<Scalar>::FromBetas(s.Rho(), b.cast<Scalar>());
    return Utilities(s, alloc, prefs).beneficial();
  });
}

}  // namespace fedtrade::bayes_mean

#endif  // FEDTRADE_BAYES_MEAN_H_
