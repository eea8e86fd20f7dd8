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

#include "fedtrade/core.h"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

namespace fedtrade {
namespace {

TEST(UtilityLpTest, Examples) {
  EXPECT_EQ(UtilityLp<double>({0.0, 0.0}, {3.0, 2}), 0.0);
  EXPECT_EQ(UtilityLp<double>({1.0, 0.0}, {3.0, 2}), -3.0);
  // -0.86872^2 - 0.57735^2
  EXPECT_NEAR(UtilityLp<double>({0.57735, 0.86872}, {1.0, 2}), -1.0880074609,
              1e-9);
}

TEST(UtilityLpTest, RejectsNonFinite) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(UtilityLp<double>({inf, 0.0}, {1.0, 2}), std::domain_error);
  EXPECT_THROW(UtilityLp<double>({0.0, std::nan("")}, {1.0, 2}),
               std::domain_error);
  EXPECT_THROW(UtilityLp<double>({-1.0, 0.0}, {1.0, 2}), std::domain_error);
}

TEST(UtilityLpTest, StrictlyDecreasingInEachArgument) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int k = 0; k < 1000; ++k) {
    const double err = u(rng), leak = u(rng), lambda = 0.01 + u(rng);
    const double step = 1e-3 + u(rng) / 10;
    const ClientPreference p{lambda, 2};
    const double base = UtilityLp<double>({err, leak}, p);
    EXPECT_LT(UtilityLp<double>({err + step, leak}, p), base);
    EXPECT_LT(UtilityLp<double>({err, leak + step}, p), base);
  }
}

TEST(CheckParticipationTest, Examples) {
  EXPECT_TRUE(CheckParticipation({-1, -2}, {-1, -2}).beneficial());
  const auto r = CheckParticipation({-1, -3}, {-1, -2});
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0], 1);
  EXPECT_TRUE(CheckParticipation({0, 0, 0}, {-1, -1, -1}).beneficial());
}

TEST(CheckParticipationTest, Errors) {
  EXPECT_THROW(CheckParticipation({-1, -2}, {-1}), std::domain_error);
  EXPECT_THROW(CheckParticipation({}, {}), std::domain_error);
}

TEST(CheckParticipationTest, ShiftKeepsVerdict) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> small(-4, 4);
  std::uniform_int_distribution<int> shift(-1000, 1000);
  for (int k = 0; k < 500; ++k) {
    // integers keep the shifted comparison exact
    std::vector<double> u(6), u0(6), us(6), u0s(6);
    const double c = shift(rng);
    for (int i = 0; i < 6; ++i) {
      u[i] = small(rng);
      u0[i] = small(rng);
      us[i] = u[i] + c;
      u0s[i] = u0[i] + c;
    }
    EXPECT_EQ(CheckParticipation(u, u0).violations,
              CheckParticipation(us, u0s).violations);
  }
}

GeneralEvaluation SquaredEval(double lambda = 1.0) {
  GeneralEvaluation e;
  e.utility = [lambda](double err, double leak) {
    return -leak * leak - lambda * err * err;
  };
  e.err_of = [](std::int64_t n, double) { return 1.0 / std::sqrt(double(n)); };
  e.leak_of = [](double alpha) { return 1.0 / alpha; };
  e.err_local = 1.0;
  return e;
}

bool BeneficialAt(const std::vector<GeneralEvaluation>& evals,
                  std::int64_t n, double alpha) {
  std::vector<double> u, u0;
  for (const auto& e : evals) {
    u.push_back(e.utility(e.err_of(n, alpha), e.leak_of(alpha)));
    u0.push_back(e.utility(e.err_local, 0.0));
  }
  return CheckParticipation(u, u0).beneficial();
}

TEST(FindSymmetricBeneficialTest, SquaredUtility) {
  const std::vector<GeneralEvaluation> evals = {SquaredEval()};
  // alpha >= 2 keeps leak^2 <= 0.25, so a handful of partners suffice
  const auto r = FindSymmetricBeneficial(evals, AlphaGrid{2.0, 100.0, 64}, 1000);
  ASSERT_TRUE(r.has_value());
  EXPECT_LE(r->n1, 16);
  EXPECT_GE(r->alpha, 2.0);
  EXPECT_TRUE(BeneficialAt(evals, r->n1, r->alpha));
}

TEST(FindSymmetricBeneficialTest, MatchesBruteForce) {
  // Brute force over the same grid: first alpha whose pure leak beats the
  // baseline, then the smallest N.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lam(0.2, 5.0);
  const AlphaGrid grid{1e-2, 1e2, 64};
  for (int k = 0; k < 30; ++k) {
    std::vector<GeneralEvaluation> evals = {SquaredEval(lam(rng)),
                                            SquaredEval(lam(rng))};
    const auto r = FindSymmetricBeneficial(evals, grid, 5000);
    std::optional<SymmetricBeneficial> want;
    for (int j = 0; j < grid.points && !want; ++j) {
      const double alpha =
          grid.lo * std::pow(grid.hi / grid.lo, double(j) / (grid.points - 1));
      bool leak_ok = true;
      for (const auto& e : evals) {
        leak_ok &= e.utility(0.0, e.leak_of(alpha)) >
                   e.utility(e.err_local, 0.0);
      }
      if (!leak_ok) continue;
      for (std::int64_t n = 1; n <= 5000; ++n) {
        if (BeneficialAt(evals, n, alpha)) {
          want = SymmetricBeneficial{n, alpha};
          break;
        }
      }
    }
    ASSERT_EQ(r.has_value(), want.has_value());
    if (!r) continue;
    EXPECT_EQ(r->n1, want->n1);
    EXPECT_DOUBLE_EQ(r->alpha, want->alpha);
    for (std::int64_t extra = 0; extra <= 2; ++extra) {
      EXPECT_TRUE(BeneficialAt(evals, r->n1 + extra, r->alpha));
    }
  }
}

TEST(FindSymmetricBeneficialTest, ContractViolations) {
  auto e = SquaredEval();
  e.err_local = 0.0;
  EXPECT_THROW(FindSymmetricBeneficial({e}, AlphaGrid{}, 100),
               ContractViolation);
  auto flat = SquaredEval();
  flat.leak_of = [](double) { return 0.5; };
  EXPECT_THROW(FindSymmetricBeneficial({flat}, AlphaGrid{}, 100),
               ContractViolation);
  auto rising = SquaredEval();
  rising.err_of = [](std::int64_t n, double) { return double(n); };
  EXPECT_THROW(FindSymmetricBeneficial({rising}, AlphaGrid{}, 100),
               ContractViolation);
  EXPECT_THROW(FindSymmetricBeneficial({}, AlphaGrid{}, 100),
               std::domain_error);
}

TEST(FindSymmetricBeneficialTest, NoneWhenNMaxTooSmall) {
  // needs N >= 2 at best
  EXPECT_FALSE(
      FindSymmetricBeneficial({SquaredEval()}, AlphaGrid{}, 1).has_value());
}

}  // namespace
}  // namespace fedtrade
