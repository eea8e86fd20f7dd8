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

#include <cmath>
#include <stdexcept>
#include <string>

#include "fedtrade/core.h"

namespace fedtrade {
namespace {

constexpr int kMonotoneSamples = 8;

double GridAlpha(const AlphaGrid& grid, int k) {
  if (grid.points == 1) return grid.lo;
  return grid.lo *
         std::pow(grid.hi / grid.lo, static_cast<double>(k) / (grid.points - 1));
}

void Require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation("FindSymmetricBeneficial: " + what);
}

void CheckAssumptions(const GeneralEvaluation& e, const AlphaGrid& grid) {
  Require(e.utility && e.err_of && e.leak_of, "missing function");
  Require(std::isfinite(e.err_local) && e.err_local > 0.0,
          "err_local must be positive");

  double prev_leak = 0.0;
  for (int k = 0; k < kMonotoneSamples; ++k) {
    const double alpha =
        grid.lo * std::pow(grid.hi / grid.lo, k / (kMonotoneSamples - 1.0));
    const double leak = e.leak_of(alpha);
    Require(leak >= 0.0, "leak_of must be nonnegative");
    if (k > 0) Require(leak < prev_leak, "leak_of not strictly decreasing");
    prev_leak = leak;
  }
  const double alpha_mid = std::sqrt(grid.lo * grid.hi);
  double prev_err = 0.0;
  for (int k = 0; k < kMonotoneSamples; ++k) {
    const std::int64_t n = std::int64_t{1} << k;
    const double err = e.err_of(n, alpha_mid);
    Require(err >= 0.0, "err_of must be nonnegative");
    if (k > 0) Require(err < prev_err, "err_of not strictly decreasing in N");
    prev_err = err;
  }
  const double leak_ref = e.leak_of(alpha_mid);
  double prev_u_err = 0.0, prev_u_leak = 0.0;
  for (int k = 0; k < kMonotoneSamples; ++k) {
    const double t = (k + 1.0) / kMonotoneSamples;
    const double u_err = e.utility(t * e.err_local, leak_ref);
    const double u_leak = e.utility(e.err_local, t * (leak_ref + 1.0));
    if (k > 0) {
      Require(u_err < prev_u_err, "utility not strictly decreasing in err");
      Require(u_leak < prev_u_leak, "utility not strictly decreasing in leak");
    }
    prev_u_err = u_err;
    prev_u_leak = u_leak;
  }
}

}  // namespace

std::optional<SymmetricBeneficial> FindSymmetricBeneficial(
    const std::vector<GeneralEvaluation>& evals, const AlphaGrid& grid,
    std::int64_t n_max) {
  if (evals.empty()) {
    throw std::domain_error("FindSymmetricBeneficial: empty evaluation set");
  }
  if (!(grid.lo > 0.0) || !(grid.hi > grid.lo) || grid.points < 1) {
    throw std::domain_error("FindSymmetricBeneficial: bad alpha grid");
  }
  if (n_max < 1) throw std::domain_error("FindSymmetricBeneficial: n_max < 1");
  for (const auto& e : evals) CheckAssumptions(e, grid);

  for (int k = 0; k < grid.points; ++k) {
    const double alpha = GridAlpha(grid, k);
    // Leak alone must already be acceptable with a perfect model.
    bool leak_ok = true;
    for (const auto& e : evals) {
      if (!(e.utility(0.0, e.leak_of(alpha)) > e.utility(e.err_local, 0.0))) {
        leak_ok = false;
        break;
      }
    }
    if (!leak_ok) continue;
    auto beneficial_at = [&](std::int64_t n) {
      for (const auto& e : evals) {
        if (!(e.utility(e.err_of(n, alpha), e.leak_of(alpha)) >=
              e.utility(e.err_local, 0.0))) {
          return false;
        }
      }
      return true;
    };
    if (!beneficial_at(n_max)) continue;
    // err_of decreases in N, so the beneficial set is an upper ray.
    std::int64_t lo = 0, hi = n_max;
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (beneficial_at(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return SymmetricBeneficial{hi, alpha};
  }
  return std::nullopt;
}

}  // namespace fedtrade
