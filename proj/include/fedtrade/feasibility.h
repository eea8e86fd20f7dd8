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

#ifndef FEDTRADE_FEASIBILITY_H_
#define FEDTRADE_FEASIBILITY_H_

#include <optional>

#include "fedtrade/numeric.h"

namespace fedtrade {

template <typename Scalar>
struct BasicFeasibilityReport {
  bool feasible = false;
  // zeta, psi or xi depending on the setting.
  Vector<Scalar> coefficients;
  Scalar coefficient_sum = Scalar(0);
  // Witness ray beta_i = direction_i * b. For the DP mean setting every b in
  // (0, witness_b_max] works and witness_b is its midpoint.
  Scalar witness_b = Scalar(0);
  Scalar witness_b_max = Scalar(0);
  std::optional<Vector<Scalar>> witness_betas;
};

using FeasibilityReport = BasicFeasibilityReport<double>;

enum class Family { kSymmetric, kPersonalized };

inline const char* FamilyName(Family f) {
  return f == Family::kSymmetric ? "symmetric" : "personalized";
}

struct GammaSearchResult {
  double b_star = 0.0;
  double gamma = 0.0;
  double ratio = 0.0;
};

// Scans b = k * b_max / (grid_points - 1) from the top and keeps the largest
// b > 0 whose allocation beta = direction * b (clipped to [0, rho]) passes
// `feasible`. Falls back to b = 0.
template <typename Feasible>
GammaSearchResult ScanRay(const VectorXd& direction, double b_max, double rho,
                          int grid_points, Feasible&& feasible) {
  GammaSearchResult out;
  const double full = rho * static_cast<double>(direction.size());
  if (!(b_max > 0.0) || direction.size() == 0) return out;
  for (int k = grid_points - 1; k >= 1; --k) {
    const double b =
        k == grid_points - 1 ? b_max : b_max * k / (grid_points - 1);
    VectorXd betas = (direction * b).cwiseMax(0.0).cwiseMin(rho);
    if (feasible(betas)) {
      out.b_star = b;
      out.gamma = betas.sum();
      out.ratio = out.gamma / full;
      return out;
    }
  }
  return out;
}

}  // namespace fedtrade

#endif  // FEDTRADE_FEASIBILITY_H_
