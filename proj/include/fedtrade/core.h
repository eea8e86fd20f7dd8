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

// Utility algebra and participation checks shared by all settings.

#ifndef FEDTRADE_CORE_H_
#define FEDTRADE_CORE_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fedtrade/errors.h"
#include "fedtrade/numeric.h"

namespace fedtrade {

template <typename Scalar>
struct BasicClientPreference {
  Scalar lambda = Scalar(1);
  int exponent = 2;
};

template <typename Scalar>
struct BasicEvalPair {
  Scalar err = Scalar(0);
  Scalar leak = Scalar(0);
};

template <typename Scalar>
struct BasicParticipationReport {
  Vector<Scalar> utilities;
  Vector<Scalar> baselines;
  std::vector<int> violations;
  // Setting-specific algebraic form of u_i - u0_i (or an equivalent
  // sign-preserving rearrangement). Empty when the setting has none.
  Vector<Scalar> residuals;

  bool beneficial() const { return violations.empty(); }
  int size() const { return static_cast<int>(utilities.size()); }
};

using ClientPreference = BasicClientPreference<double>;
using EvalPair = BasicEvalPair<double>;
using ParticipationReport = BasicParticipationReport<double>;

template <typename Scalar>
std::vector<BasicClientPreference<Scalar>> PreferencesFromLambdas(
    const Vector<Scalar>& lambdas) {
  std::vector<BasicClientPreference<Scalar>> prefs(lambdas.size());
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) prefs[i].lambda = lambdas[i];
  return prefs;
}

template <typename Scalar>
Vector<Scalar> LambdasOf(const std::vector<BasicClientPreference<Scalar>>& prefs) {
  Vector<Scalar> out(prefs.size());
  for (size_t i = 0; i < prefs.size(); ++i) out[i] = prefs[i].lambda;
  return out;
}

// -leak^p - lambda * err^p.
template <typename Scalar>
Scalar UtilityLp(const BasicEvalPair<Scalar>& eval,
                 const BasicClientPreference<Scalar>& pref) {
  using std::isfinite;
  using std::pow;
  if (!isfinite(eval.err) || !isfinite(eval.leak) || !isfinite(pref.lambda)) {
    throw std::domain_error("UtilityLp: non-finite input");
  }
  if (eval.err < Scalar(0) || eval.leak < Scalar(0)) {
    throw std::domain_error("UtilityLp: negative err or leak");
  }
  if (pref.exponent < 1) throw std::domain_error("UtilityLp: exponent < 1");
  return -pow(eval.leak, pref.exponent) -
         pref.lambda * pow(eval.err, pref.exponent);
}

template <typename Scalar>
BasicParticipationReport<Scalar> CheckParticipation(
    const Vector<Scalar>& utilities, const Vector<Scalar>& baselines) {
  if (utilities.size() != baselines.size() || utilities.size() == 0) {
    throw std::domain_error("CheckParticipation: length mismatch");
  }
  BasicParticipationReport<Scalar> report;
  report.utilities = utilities;
  report.baselines = baselines;
  for (Eigen::Index i = 0; i < utilities.size(); ++i) {
    if (!(utilities[i] >= baselines[i])) {
      report.violations.push_back(static_cast<int>(i));
    }
  }
  return report;
}

inline ParticipationReport CheckParticipation(const std::vector<double>& u,
                                              const std::vector<double>& u0) {
  return CheckParticipation<double>(
      Eigen::Map<const VectorXd>(u.data(), u.size()),
      Eigen::Map<const VectorXd>(u0.data(), u0.size()));
}

// Opaque setting for the general-utility existence search.
struct GeneralEvaluation {
  std::function<double(double err, double leak)> utility;
  std::function<double(std::int64_t n_clients, double alpha)> err_of;
  std::function<double(double alpha)> leak_of;
  double err_local = 1.0;
};

struct AlphaGrid {
  double lo = 1e-3;
  double hi = 1e3;
  int points = 256;  // geometric spacing
};

struct SymmetricBeneficial {
  std::int64_t n1 = 0;
  double alpha = 0.0;
};

// Picks the smallest grid alpha whose leak alone keeps every utility above
// its local baseline, then the smallest N making the protocol beneficial.
std::optional<SymmetricBeneficial> FindSymmetricBeneficial(
    const std::vector<GeneralEvaluation>& evals, const AlphaGrid& grid,
    std::int64_t n_max);

}  // namespace fedtrade

#endif  // FEDTRADE_CORE_H_
