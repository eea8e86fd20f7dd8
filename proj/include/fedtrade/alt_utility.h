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

// Participation under the utility -leak - lambda * err^2, for an averaging
// mean protocol and for SGD with bounded-variance gradients.

#ifndef FEDTRADE_ALT_UTILITY_H_
#define FEDTRADE_ALT_UTILITY_H_

#include <vector>

#include "fedtrade/core.h"
#include "fedtrade/dp_mean.h"
#include "fedtrade/dp_sgd.h"

namespace fedtrade::alt_utility {

using AltMeanSetting = dp_mean::Setting;

struct AltSgdSetting {
  dp_sgd::Setting base;
  double var_const = 1.0;  // M
  double var_slope = 0.0;  // M_V
  double tail_const = 0.0; // C
};

// The server publishes the average of all messages. Residual is
// lambda (sigma^2/n - sigma^2/(N n) - sum_{j != i} alpha_j^2 / N^2) - kappa / alpha_i.
ParticipationReport AltMeanFeasibility(
    const AltMeanSetting& setting, const std::vector<ClientPreference>& prefs,
    const VectorXd& alphas);

// err^2 = 8 L (M/N + d sum_j alpha_j^2 / N^2) / (3 mu^2 n) + C / (N n),
// leak = 16 sqrt(2e ln(1.25 n^3) ln(4 n^2)) B / (sqrt(n) alpha_i).
ParticipationReport AltSgdFeasibility(
    const AltSgdSetting& setting, const std::vector<ClientPreference>& prefs,
    const VectorXd& alphas);

struct ChungResult {
  double max_violation = 0.0;  // max_n b_n - bound_n
  double k_const = 0.0;
  double last_scaled = 0.0;    // n * b_n at the horizon
};

// Iterates b_{n+1} = (1 - c/n) b_n + c1/n^2 from b_{n0} and compares with
// c1/((c-1) n) + K/n^c, K = max(b_{n0} - c1/((c-1) n0), 0) n0^c.
ChungResult ChungCheck(int c, double c1, long n0, long horizon,
                       double b_start = 1.0);

}  // namespace fedtrade::alt_utility

#endif  // FEDTRADE_ALT_UTILITY_H_
