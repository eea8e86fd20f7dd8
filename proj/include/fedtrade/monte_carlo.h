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

// Seeded simulators for the three protocols. Every trial owns an RNG stream
// derived from (seed, trial index) and results are reduced in trial order, so
// output does not depend on the number of worker threads.

#ifndef FEDTRADE_MONTE_CARLO_H_
#define FEDTRADE_MONTE_CARLO_H_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "fedtrade/bayes_mean.h"
#include "fedtrade/dp_mean.h"
#include "fedtrade/dp_sgd.h"
#include "fedtrade/noise_allocation.h"

namespace fedtrade::monte_carlo {

struct SimulationResult {
  double empirical_mean = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  double analytic_reference = 0.0;
  double z_score = 0.0;
};

struct Options {
  std::int64_t trials = 100000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware concurrency
};

std::uint64_t SplitMix64(std::uint64_t x);
std::mt19937_64 TrialEngine(std::uint64_t seed, std::int64_t trial);

// Runs `trial(engine, out)` for every trial; `out` has `stats` slots. Returns
// a trials x stats row-major buffer.
std::vector<double> RunTrials(
    const Options& opt, int stats,
    const std::function<void(std::mt19937_64&, double*)>& trial);

// Mean, standard error and z-score of column `col`.
SimulationResult Summarize(const std::vector<double>& values, int stats,
                           int col, const Options& opt, double analytic);

struct DpMeanSimulation {
  std::vector<SimulationResult> per_client;
  double support_width_used = 0.0;
  bool support_width_overridden = false;
};

// Samples come from the two-point distribution true_mean +/- sigma, so the
// support width is 2 sigma whatever the setting says.
DpMeanSimulation SimDpMean(const dp_mean::Setting& setting,
                           const NoiseAllocation& alloc, const Options& opt,
                           double true_mean = 0.0);

struct BayesSimulation {
  std::vector<SimulationResult> posterior_mse;
  std::vector<SimulationResult> reconstruction_mse;
};

BayesSimulation SimBayes(const bayes_mean::Setting& setting,
                         const NoiseAllocation& alloc, const Options& opt);

// Analytic per-point reconstruction MSE: sigma^2 (n-1)/n + V.
double ReconstructionMse(const bayes_mean::Setting& setting,
                         const NoiseAllocation& alloc, int i);

struct QuadraticProblem {
  int dim = 1;
  VectorXd eigenvalues;
  Eigen::MatrixXd hessian;
  VectorXd optimum;
  double domain_radius = 0.5;
};

// Eigenvalues span [strong_convexity, smoothness] (both ends attained when
// dim >= 2), the optimum sits within a quarter diameter of the origin and the
// domain is the ball of radius diameter / 2.
QuadraticProblem MakeQuadraticProblem(int dim, double strong_convexity,
                                      double smoothness, double diameter,
                                      std::uint64_t seed);

struct SgdSimulation {
  SimulationResult result;  // analytic_reference is the bound
  int rounds = 0;           // ceil(T)
  long batch = 0;           // floor(n / rounds)
  double continuous_rounds = 0.0;
  double continuous_batch = 0.0;
  double rho = 0.0;    // batch / sigma^2
  double gamma = 0.0;  // with the simulation's rho
  double bound = 0.0;
  bool within_bound = false;  // empirical <= bound + 3 SE
};

SgdSimulation SimSgd(const dp_sgd::Setting& setting,
                     const dp_sgd::Derived& derived,
                     const VectorXd& alphas, const QuadraticProblem& problem,
                     const Options& opt);

}  // namespace fedtrade::monte_carlo

#endif  // FEDTRADE_MONTE_CARLO_H_
