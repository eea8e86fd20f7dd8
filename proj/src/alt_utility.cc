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

#include "fedtrade/alt_utility.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fedtrade::alt_utility {
namespace {

void CheckAlphas(const VectorXd& alphas, int n_clients, size_t n_prefs) {
  if (alphas.size() != n_clients || n_prefs != static_cast<size_t>(n_clients)) {
    throw std::domain_error("alt_utility: length mismatch");
  }
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0) || std::isinf(alphas[i])) {
      throw std::domain_error("alt_utility: alpha must be finite and >= 0");
    }
  }
}

double LeakTerm(double kappa, double alpha) {
  if (kappa == 0.0) return 0.0;
  if (alpha == 0.0) return std::numeric_limits<double>::infinity();
  return kappa / alpha;
}

}  // namespace

ParticipationReport AltMeanFeasibility(
    const AltMeanSetting& setting, const std::vector<ClientPreference>& prefs,
    const VectorXd& alphas) {
  setting.Validate();
  const int n_clients = setting.n_clients;
  CheckAlphas(alphas, n_clients, prefs.size());
  const double kappa = dp_mean::Derive(setting).kappa;
  const double big_n = n_clients;
  const double local_var = setting.sigma * setting.sigma / setting.n_samples;
  const double sum_sq = alphas.squaredNorm();

  VectorXd u(n_clients), u0(n_clients), res(n_clients);
  for (int i = 0; i < n_clients; ++i) {
    const double lambda = prefs[i].lambda;
    const double others = sum_sq - alphas[i] * alphas[i];
    const double err2 = local_var / big_n + others / (big_n * big_n);
    const double leak = LeakTerm(kappa, alphas[i]);
    u[i] = -leak - lambda * err2;
    u0[i] = -lambda * local_var;
    res[i] = lambda * (local_var - local_var / big_n - others / (big_n * big_n)) -
             leak;
  }
  auto report = CheckParticipation<double>(u, u0);
  report.residuals = std::move(res);
  return report;
}

ParticipationReport AltSgdFeasibility(
    const AltSgdSetting& setting, const std::vector<ClientPreference>& prefs,
    const VectorXd& alphas) {
  const dp_sgd::Setting& s = setting.base;
  s.Validate();
  if (!(setting.var_const > 0.0) || setting.var_slope < 0.0 ||
      setting.tail_const < 0.0) {
    throw std::domain_error("alt_utility: bad variance constants");
  }
  const int n_clients = s.n_clients;
  CheckAlphas(alphas, n_clients, prefs.size());
  const double n = static_cast<double>(s.n_samples);
  const double big_n = n_clients;
  const double l = s.smoothness, mu = s.strong_convexity;
  const double kappa =
      16.0 *
      std::sqrt(2.0 * std::numbers::e * std::log(1.25 * n * n * n) *
                std::log(4.0 * n * n)) *
      s.grad_support / std::sqrt(n);
  const double sum_sq = alphas.squaredNorm();
  const double err2 =
      8.0 * l * (setting.var_const / big_n + s.dim * sum_sq / (big_n * big_n)) /
          (3.0 * mu * mu * n) +
      setting.tail_const / (big_n * n);
  const double err2_local =
      8.0 * l * setting.var_const / (3.0 * mu * mu * n) + setting.tail_const / n;

  VectorXd u(n_clients), u0(n_clients), res(n_clients);
  for (int i = 0; i < n_clients; ++i) {
    const double lambda = prefs[i].lambda;
    const double leak = LeakTerm(kappa, alphas[i]);
    u[i] = -leak - lambda * err2;
    u0[i] = -lambda * err2_local;
    res[i] = lambda * (err2_local - err2) - leak;
  }
  auto report = CheckParticipation<double>(u, u0);
  report.residuals = std::move(res);
  return report;
}

ChungResult ChungCheck(int c, double c1, long n0, long horizon,
                       double b_start) {
  if (c <= 1) throw std::domain_error("ChungCheck: c must exceed 1");
  if (!(n0 > c) || !(horizon > n0)) {
    throw std::domain_error("ChungCheck: need horizon > n0 > c");
  }
  const double lead = c1 / (c - 1.0);
  const double excess = std::max(b_start - lead / n0, 0.0);
  ChungResult out;
  out.k_const = excess * std::pow(static_cast<double>(n0), c);
  out.max_violation = -std::numeric_limits<double>::infinity();
  double b = b_start;
  for (long n = n0;; ++n) {
    const double ratio = static_cast<double>(n0) / n;
    const double bound = lead / n + excess * std::pow(ratio, c);
    out.max_violation = std::max(out.max_violation, b - bound);
    if (n == horizon) {
      out.last_scaled = n * b;
      break;
    }
    const double nn = static_cast<double>(n);
    b = (1.0 - c / nn) * b + c1 / (nn * nn);
  }
  return out;
}

}  // namespace fedtrade::alt_utility
