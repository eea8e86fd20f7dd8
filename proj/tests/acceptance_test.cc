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

// End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
// exits 0 iff the failing set equals --expect-red.
//
//   acceptance_test --cli <fedtrade> --configs <dir> --workdir <dir>
//                   [--expect-red 6,...] [--only 1,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <fmt/core.h>

#include "fedtrade/alt_utility.h"
#include "fedtrade/bayes_mean.h"
#include "fedtrade/dp_mean.h"
#include "fedtrade/dp_sgd.h"
#include "fedtrade/experiment.h"
#include "fedtrade/monte_carlo.h"

namespace {

namespace fs = std::filesystem;
using fedtrade::ClientPreference;
using fedtrade::NoiseAllocation;
using fedtrade::VectorXd;
using Real = long double;

struct Args {
  std::string cli;
  std::string configs;
  std::string workdir = "acceptance_work";
  std::set<int> expect_red;
  std::set<int> only;
};

std::set<int> ParseIntSet(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

// Collects detail lines for one criterion.
class Report {
 public:
  void Note(const std::string& s) { notes_.push_back(s); }
  void Fail(const std::string& s) {
    Known(s);
    unexplained_ = true;
  }
  // A failure with a recorded analysis; only these may be expected red.
  void Known(const std::string& s) {
    ok_ = false;
    if (failures_++ < 10) notes_.push_back("  !! " + s);
  }
  bool ok() const { return ok_; }
  bool unexplained() const { return unexplained_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  bool ok_ = true;
  bool unexplained_ = false;
  int failures_ = 0;
  std::vector<std::string> notes_;
};

double LogUniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random allocation with some clients pinned at the ends.
VectorXd RandomBetas(std::mt19937_64& rng, int n, double rho) {
  VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const int pick = UniformInt(rng, 0, 9);
    b[i] = pick == 0 ? 0.0 : pick == 1 ? rho : Uniform(rng, 0.0, rho);
  }
  return b;
}

// ---------------------------------------------------------------------------
// 1. Monte Carlo vs analytic MSE formulas.

void CheckZ(Report& r, const char* what, int inst, int i,
            const fedtrade::monte_carlo::SimulationResult& res, double want,
            double* worst) {
  if (std::abs(res.analytic_reference - want) > 1e-12 * (1 + std::abs(want))) {
    r.Fail(fmt::format("{} #{} client {}: analytic {} vs independent {}", what,
                       inst, i, res.analytic_reference, want));
  }
  const double z =
      res.std_error > 0 ? (res.empirical_mean - want) / res.std_error
                        : (res.empirical_mean == want ? 0.0 : INFINITY);
  *worst = std::max(*worst, std::abs(z));
  if (!(std::abs(z) <= 4.0)) {
    r.Fail(fmt::format("{} #{} client {}: z = {:.3f}", what, inst, i, z));
  }
}

void Criterion1(Report& r) {
  using namespace fedtrade::monte_carlo;
  std::mt19937_64 rng(101);
  Options opt;
  opt.trials = 100000;
  double worst_dp = 0, worst_post = 0, worst_rec = 0;
  int checks = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < 20; ++k) {
    const int n_clients = UniformInt(rng, 1, 6);
    const double sigma = LogUniform(rng, 0.3, 5.0);
    fedtrade::dp_mean::Setting s{n_clients, UniformInt(rng, 1, 50), sigma,
                                 2 * sigma};
    const double rho = s.n_samples / (sigma * sigma);
    const auto alloc = NoiseAllocation::FromBetas(rho, RandomBetas(rng, n_clients, rho));
    opt.seed = 1000 + k;
    const auto sim = SimDpMean(s, alloc, opt, Uniform(rng, -3, 3));
    for (int i = 0; i < n_clients; ++i) {
      const double others = alloc.betas().sum() - alloc.betas()[i];
      CheckZ(r, "dp mean mse", k, i, sim.per_client[i], 1.0 / (others + rho),
             &worst_dp);
      ++checks;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  for (int k = 0; k < 20; ++k) {
    const int n_clients = UniformInt(rng, 1, 6);
    fedtrade::bayes_mean::Setting s{n_clients, UniformInt(rng, 1, 30),
                                    LogUniform(rng, 0.3, 5.0),
                                    LogUniform(rng, 0.05, 20.0)};
    const double rho = s.Rho();
    const auto alloc = NoiseAllocation::FromBetas(rho, RandomBetas(rng, n_clients, rho));
    opt.seed = 2000 + k;
    const auto sim = SimBayes(s, alloc, opt);
    for (int i = 0; i < n_clients; ++i) {
      const Real g = alloc.betas().sum() - alloc.betas()[i];
      const Real beta = alloc.betas()[i];
      const Real tau = s.tau;
      const Real q = rho * (g + tau) / (g + rho + tau);
      const Real inv_alpha_sq = beta >= rho ? INFINITY : rho * beta / (rho - beta);
      const Real leak2 = 1 / Real(rho) + 1 / tau - 1 / (inv_alpha_sq + q);
      const Real big_s = Real(s.sigma) * s.sigma + 1 / tau;
      CheckZ(r, "bayes posterior", k, i, sim.posterior_mse[i],
             static_cast<double>(1 / (g + rho + tau)), &worst_post);
      CheckZ(r, "bayes reconstruction", k, i, sim.reconstruction_mse[i],
             static_cast<double>(big_s - leak2), &worst_rec);
      checks += 2;
    }
  }
  const auto t2 = std::chrono::steady_clock::now();
  r.Note(fmt::format(
      "{} z checks, 20+20 instances at 1e5 trials; max |z| dp {:.2f}, "
      "posterior {:.2f}, reconstruction {:.2f}; {:.1f}s / {:.1f}s",
      checks, worst_dp, worst_post, worst_rec,
      std::chrono::duration<double>(t1 - t0).count(),
      std::chrono::duration<double>(t2 - t1).count()));
}

// ---------------------------------------------------------------------------
// 2. One-sided SGD bound.

void Criterion2(Report& r) {
  using namespace fedtrade::monte_carlo;
  std::mt19937_64 rng(202);
  int done = 0, tries = 0;
  double worst = -INFINITY;
  while (done < 10 && tries < 1000) {
    ++tries;
    fedtrade::dp_sgd::Setting s;
    s.n_clients = UniformInt(rng, 1, 5);
    s.n_samples = UniformInt(rng, 200, 2000);
    s.dim = UniformInt(rng, 1, 10);
    s.smoothness = LogUniform(rng, 0.5, 4.0);
    s.strong_convexity = s.smoothness * Uniform(rng, 0.05, 0.6);
    s.diameter = LogUniform(rng, 0.5, 4.0);
    s.sigma = LogUniform(rng, 0.2, 3.0);
    s.grad_support = 2 * s.sigma;
    const std::vector<ClientPreference> prefs(s.n_clients);
    const auto d = fedtrade::dp_sgd::Derive(s, prefs);
    if (std::ceil(d.rounds) * 2 > s.n_samples) continue;
    VectorXd alphas(s.n_clients);
    for (auto& a : alphas) a = UniformInt(rng, 0, 3) == 0 ? 0.0 : Uniform(rng, 0, 1.5);
    const auto problem =
        MakeQuadraticProblem(s.dim, s.strong_convexity, s.smoothness,
                             s.diameter, 50 + tries);
    Options opt;
    opt.trials = 1000;
    opt.seed = 300 + tries;
    const auto sim = SimSgd(s, d, alphas, problem, opt);

    // Bound recomputed from the simulation's own integer schedule.
    const double rho = static_cast<double>(sim.batch) / (s.sigma * s.sigma);
    double gamma = 0;
    for (double a : alphas) gamma += 1.0 / (1.0 / rho + s.dim * a * a);
    const double chi = s.strong_convexity / s.smoothness;
    const double lmu_gamma = s.smoothness * s.strong_convexity * gamma;
    const double bound =
        sim.rounds >= d.rounds
            ? 1 / ((1 + chi / (2 - chi) * (sim.rounds - d.rounds)) * lmu_gamma)
            : std::pow(1 - chi / 2, sim.rounds) * d.y0 / lmu_gamma;
    if (std::abs(bound - sim.bound) > 1e-10 * bound) {
      r.Fail(fmt::format("instance {}: bound {} vs independent {}", tries,
                         sim.bound, bound));
    }
    const double slack = sim.result.empirical_mean - (bound + 3 * sim.result.std_error);
    worst = std::max(worst, sim.result.empirical_mean / bound);
    if (slack > 0) {
      r.Fail(fmt::format("instance {}: empirical {} > bound {} + 3 SE {}", tries,
                         sim.result.empirical_mean, bound, sim.result.std_error));
    }
    ++done;
  }
  if (done < 10) r.Fail(fmt::format("only {} usable instances", done));
  r.Note(fmt::format("{} quadratic instances at 1e3 trials; max empirical/bound {:.3f}",
                     done, worst));
}

// ---------------------------------------------------------------------------
// 3. Existence verdicts vs brute force on the beta cube.

// Per-axis grid: zero, geometric points near zero and a uniform sweep, all
// inside [0, top).
std::vector<double> AxisGrid(double top, double geo_lo) {
  std::vector<double> g = {0.0};
  const int geo = 100, uni = 100;
  for (int k = 0; k < geo; ++k) {
    g.push_back(top * geo_lo * std::pow(0.5 / geo_lo, k / double(geo - 1)));
  }
  for (int k = 1; k <= uni; ++k) g.push_back(top * k / (uni + 1.0));
  std::sort(g.begin(), g.end());
  return g;
}

// Residual of client i relative to the magnitude of the terms it cancels.
using RelResidual = std::function<Real(const std::vector<double>& betas, int i)>;

// Best (largest) min-over-clients relative residual on the grid, excluding
// the origin. Stops early once `stop_above` is exceeded.
Real GridBest(int n, const std::vector<double>& axis, const RelResidual& res,
              Real stop_above) {
  std::vector<int> idx(n, 0);
  std::vector<double> betas(n, 0.0);
  Real best = -INFINITY;
  const int m = static_cast<int>(axis.size());
  while (true) {
    int k = 0;
    while (k < n && ++idx[k] == m) idx[k++] = 0;
    if (k == n) break;
    bool nonzero = false;
    for (int i = 0; i < n; ++i) {
      betas[i] = axis[idx[i]];
      nonzero |= betas[i] > 0;
    }
    if (!nonzero) continue;
    Real worst = INFINITY;
    for (int i = 0; i < n && worst > best; ++i) worst = std::min(worst, res(betas, i));
    if (worst > best) {
      best = worst;
      if (best > stop_above) return best;
    }
  }
  return best;
}

struct VerdictTally {
  int instances = 0, feasible = 0, rejected = 0, disagreements = 0;
};

void Judge(Report& r, VerdictTally& t, const char* what, bool solver,
           Real best, int n) {
  constexpr Real kTie = 1e-8;
  ++t.instances;
  t.feasible += solver;
  const bool agree = solver ? best >= -kTie : best <= kTie;
  if (!agree) {
    ++t.disagreements;
    r.Fail(fmt::format("{} N={}: solver {} but grid best relative residual {}",
                       what, n, solver ? "feasible" : "infeasible",
                       static_cast<double>(best)));
  }
}

void Criterion3(Report& r) {
  constexpr int kPerSetting = 200;
  std::mt19937_64 rng(303);

  // Mean estimation with DP messages.
  VerdictTally dp;
  while (dp.instances < kPerSetting) {
    const int n = UniformInt(rng, 2, 3);
    const long n_samples = UniformInt(rng, 5, 500);
    const double sigma = LogUniform(rng, 0.5, 20.0);
    const double width = LogUniform(rng, 0.5, 40.0);
    const double rho = n_samples / (sigma * sigma);
    const double kappa =
        std::sqrt(2 * std::log(1.25 * n_samples * n_samples)) * width / n_samples;
    std::vector<double> lambda(n);
    const double unit = kappa * kappa * rho * rho;
    Real zsum = 0;
    for (auto& l : lambda) {
      l = unit * LogUniform(rng, 0.05, 20.0);
      zsum += l / (l + unit);
    }
    if (std::abs(zsum - 1) < 0.25) {
      ++dp.rejected;
      continue;
    }
    fedtrade::dp_mean::Setting s{n, n_samples, sigma, width};
    std::vector<ClientPreference> prefs(n);
    for (int i = 0; i < n; ++i) prefs[i].lambda = lambda[i];
    const auto d = fedtrade::dp_mean::Derive(s);
    const bool solver = fedtrade::dp_mean::Existence(s, d, prefs).feasible;
    const RelResidual res = [&](const std::vector<double>& b, int i) -> Real {
      Real g = 0;
      for (int j = 0; j < n; ++j) g += j == i ? 0 : b[j];
      const Real gain = lambda[i] * g / (Real(rho) * (g + rho));
      const Real leak2 = Real(kappa) * kappa * rho * b[i] / (rho - b[i]);
      return (gain - leak2) / (gain + leak2);
    };
    Judge(r, dp, "dp mean", solver,
          GridBest(n, AxisGrid(rho, 1e-6), res, 1e-8), n);
  }

  // Projected SGD.
  VerdictTally sgd;
  while (sgd.instances < kPerSetting) {
    fedtrade::dp_sgd::Setting s;
    s.n_clients = UniformInt(rng, 2, 3);
    s.n_samples = UniformInt(rng, 100, 5000);
    s.dim = UniformInt(rng, 1, 10);
    s.smoothness = LogUniform(rng, 0.5, 4.0);
    s.strong_convexity = s.smoothness * Uniform(rng, 0.05, 0.9);
    s.diameter = LogUniform(rng, 0.5, 4.0);
    s.sigma = LogUniform(rng, 0.2, 3.0);
    s.grad_support = LogUniform(rng, 0.1, 5.0);
    const int n = s.n_clients;
    const auto base = fedtrade::dp_sgd::Derive(s, std::vector<ClientPreference>(n));
    if (!(base.rounds > 1)) continue;
    const double lmu = s.smoothness * s.strong_convexity;
    const double unit = lmu * s.dim * base.kappa * base.kappa * base.rho * base.rho;
    std::vector<ClientPreference> prefs(n);
    for (auto& p : prefs) p.lambda = unit * LogUniform(rng, 0.2, 60.0);
    const auto d = fedtrade::dp_sgd::Derive(s, prefs);
    const auto ex = fedtrade::dp_sgd::Existence(d);
    if (std::abs(ex.g_max) < 0.05) {
      ++sgd.rejected;
      continue;
    }
    const Real rho = d.rho, kappa = d.kappa;
    const RelResidual res = [&](const std::vector<double>& b, int i) -> Real {
      Real gamma = 0;
      for (double x : b) gamma += x;
      const Real lam = prefs[i].lambda;
      const Real leak2 = kappa * kappa * s.dim * rho * b[i] / (rho - b[i]);
      const Real local = lam / (lmu * rho);
      const Real shared = lam / (lmu * gamma);
      return (local - shared - leak2) / (local + shared + leak2);
    };
    Judge(r, sgd, "dp sgd", ex.base.feasible,
          GridBest(n, AxisGrid(rho, 1e-4), res, 1e-8), n);
  }

  // Bayesian mean, small-beta cube.
  VerdictTally bayes;
  while (bayes.instances < kPerSetting) {
    const int n = UniformInt(rng, 2, 3);
    fedtrade::bayes_mean::Setting s{n, UniformInt(rng, 1, 50),
                                    LogUniform(rng, 0.3, 5.0),
                                    LogUniform(rng, 0.1, 10.0)};
    const Real rho = s.Rho(), tau = s.tau;
    // lambda at which the first-order coefficient vanishes
    const Real lambda0 = (rho + tau) * (rho + tau) / (tau * tau);
    std::vector<ClientPreference> prefs(n);
    Real xsum = 0, xmin = INFINITY;
    for (auto& p : prefs) {
      p.lambda = static_cast<double>(lambda0 * LogUniform(rng, 0.5, 30.0));
      const Real c = p.lambda / ((rho + tau) * (rho + tau)) - 1 / (tau * tau);
      const Real xi = c / (c + (rho + tau) * (rho + tau) / (rho * rho * tau * tau));
      xsum += xi;
      xmin = std::min(xmin, xi);
    }
    if (std::abs(xsum - 1) < 0.25 || std::abs(xmin) < 0.05) {
      ++bayes.rejected;
      continue;
    }
    const bool solver = fedtrade::bayes_mean::FirstOrderExistence(s, prefs).feasible;
    const RelResidual res = [&](const std::vector<double>& b, int i) -> Real {
      Real g = 0;
      for (int j = 0; j < n; ++j) g += j == i ? 0 : b[j];
      const Real beta = b[i];
      const Real lam = prefs[i].lambda;
      const Real q = rho * (g + tau) / (g + rho + tau);
      const Real reveal = 1 / (rho * beta / (rho - beta) + q);
      const Real pos = reveal + lam / (rho + tau);
      const Real neg = 1 / rho + 1 / tau + lam / (g + rho + tau);
      const Real scale = std::abs(neg - lam / (g + rho + tau) - reveal) +
                         lam * g / ((rho + tau) * (g + rho + tau));
      return (pos - neg) / scale;
    };
    const double top = 1e-4 * static_cast<double>(std::min(rho, tau));
    Judge(r, bayes, "bayes mean", solver,
          GridBest(n, AxisGrid(top, 1e-6), res, 1e-8), n);
  }

  for (const auto& [name, t] : {std::pair{"dp mean", dp}, std::pair{"dp sgd", sgd},
                                std::pair{"bayes mean", bayes}}) {
    r.Note(fmt::format("{}: {} instances ({} feasible), {} near-boundary draws "
                       "skipped, {} disagreements",
                       name, t.instances, t.feasible, t.rejected, t.disagreements));
  }
}

// ---------------------------------------------------------------------------
// 4. Closed-form symmetric optima vs numeric argmax.

struct ArgmaxResult {
  double beta = 0;
  Real gain = 0;
  double cell = 0;
};

// Dense grid on [0, hi] (hi excluded when `open`), then golden-section polish
// inside the neighbouring cells.
ArgmaxResult NumericArgmax(const std::function<Real(double)>& h, double hi,
                           bool open) {
  constexpr int kPoints = 20000;
  const double cell = hi / (kPoints - 1);
  const int last = open ? kPoints - 2 : kPoints - 1;
  int best = 0;
  Real best_val = h(0.0);
  for (int k = 1; k <= last; ++k) {
    const Real v = h(k * cell);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  double a = std::max(0, best - 1) * cell;
  double b = std::min(last, best + 1) * cell;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200 && b - a > 1e-15 * hi; ++it) {
    const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    if (h(x1) < h(x2)) a = x1; else b = x2;
  }
  ArgmaxResult out{best * cell, best_val, cell};
  const double mid = (a + b) / 2;
  if (h(mid) > best_val) out.gain = h(mid);
  return out;
}

void CompareOptimum(Report& r, const char* what, int draw, double beta_star,
                    double gain, const std::function<Real(double)>& h,
                    double hi, bool open, int* tie_excused) {
  const auto num = NumericArgmax(h, hi, open);
  const Real scale = std::max<Real>(std::abs(num.gain), 1e-300);
  const bool gain_ok = std::abs(gain - num.gain) <= 1e-6 * std::max<Real>(scale, std::abs(gain)) ||
                       (std::abs(num.gain) < 1e-12 && std::abs(gain) < 1e-12);
  const bool closed_consistent =
      std::abs(h(beta_star) - gain) <= 1e-9 * (1 + std::abs(gain));
  bool cell_ok = std::abs(beta_star - num.beta) <= 1.0001 * num.cell;
  if (!cell_ok && gain_ok && closed_consistent) {
    // two maxima with equal gain: either argmax is correct
    ++*tie_excused;
    cell_ok = true;
  }
  if (!cell_ok || !gain_ok || !closed_consistent) {
    r.Fail(fmt::format("{} draw {}: beta* {} vs grid {} (cell {}), gain {} vs {} "
                       "h(beta*) {}",
                       what, draw, beta_star, num.beta, num.cell, gain,
                       static_cast<double>(num.gain),
                       static_cast<double>(h(beta_star))));
  }
}

void Criterion4(Report& r) {
  std::mt19937_64 rng(404);
  int ties = 0, profitable_dp = 0, profitable_sgd = 0;
  std::map<int, int> bayes_cases;

  for (int k = 0; k < 100; ++k) {
    const int n = UniformInt(rng, 2, 60);
    const long n_samples = UniformInt(rng, 2, 1000);
    const double sigma = LogUniform(rng, 0.3, 30.0);
    const double width = LogUniform(rng, 0.1, 50.0);
    fedtrade::dp_mean::Setting s{n, n_samples, sigma, width};
    const auto d = fedtrade::dp_mean::Derive(s);
    const Real rho = d.rho, kappa = d.kappa;
    const double lambda =
        static_cast<double>(kappa * kappa * rho * rho / (n - 1)) * LogUniform(rng, 0.3, 1e3);
    const auto o = fedtrade::dp_mean::SymmetricOptimumOf(s, d, lambda);
    profitable_dp += o.profitable;
    const auto h = [&](double beta) -> Real {
      const Real g = Real(n - 1) * beta;
      return lambda / rho - lambda / (g + rho) -
             kappa * kappa * rho * beta / (rho - beta);
    };
    CompareOptimum(r, "dp mean", k, o.beta_star, o.gain, h, d.rho, true, &ties);
  }

  for (int k = 0; k < 100; ++k) {
    fedtrade::dp_sgd::Setting s;
    s.n_clients = UniformInt(rng, 2, 60);
    s.n_samples = UniformInt(rng, 100, 5000);
    s.dim = UniformInt(rng, 1, 20);
    s.smoothness = LogUniform(rng, 0.5, 4.0);
    s.strong_convexity = s.smoothness * Uniform(rng, 0.05, 0.9);
    s.diameter = LogUniform(rng, 0.5, 4.0);
    s.sigma = LogUniform(rng, 0.2, 3.0);
    s.grad_support = LogUniform(rng, 0.1, 5.0);
    const auto d = fedtrade::dp_sgd::Derive(
        s, std::vector<ClientPreference>(s.n_clients));
    const Real rho = d.rho, kappa = d.kappa, lmu = d.LMu();
    const Real unit = lmu * s.dim * kappa * kappa * rho * rho;
    const double lambda = static_cast<double>(unit / s.n_clients) * LogUniform(rng, 0.3, 300.0);
    const auto o = fedtrade::dp_sgd::SymmetricOptimumOf(d, lambda);
    profitable_sgd += o.profitable;
    const int n = s.n_clients;
    // Gain over local training; the all-silent allocation keeps u = u0.
    const auto h = [&](double beta) -> Real {
      if (beta <= 0) return 0;
      return lambda / (lmu * rho) - lambda / (lmu * n * Real(beta)) -
             kappa * kappa * s.dim * rho * beta / (rho - beta);
    };
    CompareOptimum(r, "dp sgd", k, o.beta_star, o.gain, h, d.rho, true, &ties);
  }

  for (int k = 0; k < 100; ++k) {
    const int n = UniformInt(rng, 2, 60);
    fedtrade::bayes_mean::Setting s{n, UniformInt(rng, 1, 100),
                                    LogUniform(rng, 0.3, 10.0),
                                    LogUniform(rng, 0.05, 20.0)};
    const Real rho = s.Rho(), tau = s.tau;
    const Real lambda0 = (rho + tau) * (rho + tau) / (tau * tau);
    const double lambda = static_cast<double>(lambda0 * LogUniform(rng, 0.3, 100.0));
    const auto o = fedtrade::bayes_mean::SymmetricOptimumOf(s, lambda);
    ++bayes_cases[o.case_id];
    const auto h = [&](double b) -> Real {
      const Real beta = b;
      const Real g = Real(n - 1) * beta;
      const Real inv_alpha_sq = beta >= rho ? INFINITY : rho * beta / (rho - beta);
      const Real reveal = 1 / (inv_alpha_sq + rho * (g + tau) / (g + rho + tau));
      return reveal - 1 / rho - 1 / tau - lambda / (g + rho + tau) +
             lambda / (rho + tau);
    };
    CompareOptimum(r, "bayes mean", k, o.beta_star, o.gain, h, s.Rho(), false,
                   &ties);
  }
  std::string cases;
  for (const auto& [c, count] : bayes_cases) cases += fmt::format(" {}:{}", c, count);
  r.Note(fmt::format("3 x 100 draws on 2e4-point grids; profitable dp {} sgd {}; "
                     "bayes cases{}; {} equal-gain argmax ties",
                     profitable_dp, profitable_sgd, cases, ties));
}

// ---------------------------------------------------------------------------
// 5. Large-N asymptotics.

void Criterion5(Report& r) {
  const fedtrade::bayes_mean::Setting s{10000, 1, 1.0, 1.0};
  const double lambda = 5.0;
  const auto o = fedtrade::bayes_mean::SymmetricOptimumOf(s, lambda);
  const double beta_approx = std::sqrt((lambda - 1) / s.n_clients) * s.Rho();
  const double gain_approx = lambda / (s.Rho() + s.tau) - 1 / s.tau;
  const double eb = std::abs(o.beta_star / beta_approx - 1);
  const double eg = std::abs(o.gain / gain_approx - 1);
  r.Note(fmt::format("beta* {:.6g} vs {:.6g} ({:.2f}%), gain {:.6g} vs {:.6g} ({:.2f}%)",
                     o.beta_star, beta_approx, 100 * eb, o.gain, gain_approx,
                     100 * eg));
  if (!(eb <= 0.05)) r.Fail("beta* outside 5%");
  if (!(eg <= 0.05)) r.Fail("gain outside 5%");
}

// ---------------------------------------------------------------------------
// CLI helpers.

int RunCli(const Args& a, const std::string& args, const std::string& log) {
  const std::string cmd = "\"" + a.cli + "\" " + args + " > \"" + log + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 6. Personalized vs symmetric search along the lognormal location grid.

void Criterion6(const Args& a, Report& r) {
  const fs::path work = fs::path(a.workdir) / "c6";
  fs::create_directories(work);
  std::map<std::string, std::vector<fedtrade::experiment::AggregateRow>> rows;
  for (const std::string setting : {"dpmean", "bayesmean"}) {
    const auto out = work / setting;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = RunCli(
        a,
        "experiment --config \"" + a.configs + "/" + setting +
            "_experiment.yaml\" --out \"" + out.string() + "\"",
        (work / (setting + ".log")).string());
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0).count();
    if (code != 0) {
      r.Fail(fmt::format("{} experiment exited {}", setting, code));
      return;
    }
    rows[setting] =
        fedtrade::experiment::ParseAggregatesCsv(Slurp(out / "experiment.csv"));
    r.Note(fmt::format("{}: {} aggregate rows in {:.1f}s", setting,
                       rows[setting].size(), secs));
  }

  // m -> {symmetric, personalized}
  auto table = [](const std::vector<fedtrade::experiment::AggregateRow>& v) {
    std::map<double, std::pair<double, double>> t;
    for (const auto& row : v) {
      auto& cell = t[row.m.value_or(NAN)];
      (row.family == fedtrade::Family::kSymmetric ? cell.first : cell.second) =
          row.mean_ratio;
    }
    return t;
  };
  const auto dp = table(rows["dpmean"]);
  const auto bayes = table(rows["bayesmean"]);
  if (dp.size() != 6 || bayes.size() != 6) {
    r.Fail("expected six m values per setting");
    return;
  }
  for (const auto& [m, v] : dp) {
    r.Note(fmt::format("dp    m={:>2}: symmetric {:.4f} personalized {:.4f}", m,
                       v.first, v.second));
    if (!(v.second >= v.first)) r.Fail(fmt::format("dp personalized < symmetric at m={}", m));
  }
  for (const auto& [m, v] : bayes) {
    r.Note(fmt::format("bayes m={:>2}: symmetric {:.4f} personalized {:.4f}", m,
                       v.first, v.second));
  }
  const auto& lo = bayes.begin()->second;
  const auto& hi = bayes.rbegin()->second;
  if (!(lo.second >= lo.first)) r.Fail("bayes personalized < symmetric at the smallest m");
  if (!(hi.first >= hi.second)) {
    r.Known(fmt::format("bayes symmetric {:.4f} < personalized {:.4f} at the largest m",
                        hi.first, hi.second));
  }

  // One step further along the grid, for the record.
  {
    std::ifstream in(a.configs + "/bayesmean_experiment.yaml");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    const auto pos = text.find("locations:");
    if (pos == std::string::npos) return;
    text.replace(pos, text.find('\n', pos) - pos, "locations: [4]");
    std::ofstream(work / "bayes_m4.yaml") << text;
    const auto out = work / "bayes_m4";
    if (RunCli(a,
               "experiment --config \"" + (work / "bayes_m4.yaml").string() +
                   "\" --out \"" + out.string() + "\"",
               (work / "bayes_m4.log").string()) != 0) {
      r.Fail("bayes m=4 run failed");
      return;
    }
    const auto m4 = table(
        fedtrade::experiment::ParseAggregatesCsv(Slurp(out / "experiment.csv")));
    for (const auto& [m, v] : m4) {
      r.Note(fmt::format("bayes m={:>2}: symmetric {:.4f} personalized {:.4f} "
                         "(informational)",
                         m, v.first, v.second));
    }
  }
}

// ---------------------------------------------------------------------------
// 7. Alternative utility.

void Criterion7(Report& r) {
  using namespace fedtrade::alt_utility;
  std::vector<bool> verdict;
  for (long n : {100L, 10000L, 1000000L}) {
    const AltMeanSetting s{100, n, 10.0, 20.0};
    const auto rep = AltMeanFeasibility(
        s, std::vector<ClientPreference>(100, ClientPreference{100.0, 2}),
        VectorXd::Ones(100));
    verdict.push_back(rep.beneficial());
    // LHS and RHS of the participation inequality, written out.
    const double lhs = 100.0 * (100.0 / n - 100.0 / (100.0 * n) - 99.0 / 10000.0);
    const double rhs = std::sqrt(2 * std::log(1.25 * n * double(n))) * 20.0 / n;
    if (rep.beneficial() != (lhs >= rhs)) {
      r.Fail(fmt::format("n={}: verdict {} but lhs {} rhs {}", n,
                         rep.beneficial(), lhs, rhs));
    }
  }
  if (!(verdict[0] && !verdict[1] && !verdict[2])) r.Fail("mean verdicts do not flip");
  r.Note(fmt::format("mean feasibility at n=1e2,1e4,1e6: {} {} {}", verdict[0],
                     verdict[1], verdict[2]));

  std::mt19937_64 rng(707);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const int c = UniformInt(rng, 2, 8);
    const long n0 = c + UniformInt(rng, 1, 40);
    const auto res = ChungCheck(c, LogUniform(rng, 0.01, 20.0), n0,
                                UniformInt(rng, 1000, 50000), Uniform(rng, 0, 5));
    worst = std::max(worst, res.max_violation);
    if (!(res.max_violation <= 1e-8)) {
      r.Fail(fmt::format("chung config {}: violation {}", k, res.max_violation));
    }
  }
  r.Note(fmt::format("20 recurrence configurations, worst violation {:.3g}", worst));
}

// ---------------------------------------------------------------------------
// 8. Byte-identical CSV across repeated CLI runs.

void Criterion8(const Args& a, Report& r) {
  const fs::path work = fs::path(a.workdir) / "c8";
  fs::create_directories(work);
  {
    std::ofstream f(work / "exp.yaml");
    f << "schema_version: 1\nsetting: dpmean\n"
         "parameters: {n_clients: 5, n_samples: 100, sigma: 10, support_width: 20}\n"
         "lambda_model: {kind: lognormal, locations: [-1, 1, 3]}\n"
         "repetitions: 100\ngrid_points: 256\nseed: 77\n";
  }
  struct Run {
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Run> runs = {
      {"simulate --config \"" + a.configs + "/dpmean.yaml\"", {"simulate.csv"}},
      {"simulate --config \"" + a.configs + "/bayesmean.yaml\" --seed 5", {"simulate.csv"}},
      {"simulate --config \"" + a.configs + "/dpsgd.yaml\"", {"simulate.csv"}},
      {"experiment --config \"" + (work / "exp.yaml").string() + "\"",
       {"experiment.csv", "experiment_reps.csv", "experiment.svg"}},
  };
  int compared = 0;
  for (size_t k = 0; k < runs.size(); ++k) {
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = work / fmt::format("run{}_{}", k, rep);
      const int code = RunCli(a, runs[k].args + " --out \"" + dir.string() + "\"",
                              (dir.string() + ".log"));
      if (code != 0) {
        r.Fail(fmt::format("`{}` exited {}", runs[k].args, code));
        return;
      }
      std::string all;
      for (const auto& f : runs[k].files) all += Slurp(dir / f) + '\0';
      outputs.push_back(all);
    }
    ++compared;
    if (outputs[0] != outputs[1] || outputs[0].size() < 10) {
      r.Fail(fmt::format("`{}` output differs between runs", runs[k].args));
    }
  }
  r.Note(fmt::format("{} CLI commands run twice, outputs compared byte for byte",
                     compared));
}

}  // namespace

int main(int argc, char** argv) {
  Args a;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i], val = argv[i + 1];
    if (key == "--cli") a.cli = val;
    else if (key == "--configs") a.configs = val;
    else if (key == "--workdir") a.workdir = val;
    else if (key == "--expect-red") a.expect_red = ParseIntSet(val);
    else if (key == "--only") a.only = ParseIntSet(val);
    else {
      std::cerr << "unknown flag " << key << "\n";
      return 2;
    }
  }
  if (a.cli.empty() || a.configs.empty()) {
    std::cerr << "usage: acceptance_test --cli <fedtrade> --configs <dir> "
                 "[--workdir <dir>] [--expect-red 6] [--only 1,2]\n";
    return 2;
  }
  fs::remove_all(a.workdir);
  fs::create_directories(a.workdir);

  const std::vector<std::pair<const char*, std::function<void(Report&)>>> criteria = {
      {"Monte Carlo matches the analytic MSE formulas", Criterion1},
      {"SGD simulation stays under the accuracy bound", Criterion2},
      {"existence verdicts agree with brute-force grids", Criterion3},
      {"closed-form symmetric optima match numeric argmax", Criterion4},
      {"large-N asymptotics within 5%", Criterion5},
      {"personalized vs symmetric orderings", [&](Report& r) { Criterion6(a, r); }},
      {"alternative-utility flip and recurrence bound", Criterion7},
      {"repeated CLI runs give identical CSV", [&](Report& r) { Criterion8(a, r); }},
  };

  std::set<int> failed;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!a.only.empty() && !a.only.count(id)) continue;
    Report rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[k].second(rep);
    } catch (const std::exception& e) {
      rep.Fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& line : rep.notes()) std::cout << "    " << line << "\n";
    std::cout << (rep.ok() ? "PASS" : "FAIL") << " " << id << " "
              << criteria[k].first << fmt::format(" ({:.1f}s)", secs) << std::endl;
    if (!rep.ok()) failed.insert(id);
    if (rep.unexplained() && a.expect_red.count(id)) {
      std::cout << "criterion " << id << " failed for an unrecorded reason\n";
      failed.insert(-id);
    }
  }

  std::set<int> expected;
  for (int id : a.expect_red) {
    if (a.only.empty() || a.only.count(id)) expected.insert(id);
  }
  if (failed != expected) {
    std::cout << "failing set differs from the expected red set\n";
    return 1;
  }
  if (!failed.empty()) {
    std::cout << "only the expected red criteria failed\n";
  }
  return 0;
}
