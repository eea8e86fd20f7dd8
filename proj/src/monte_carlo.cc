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

#include "fedtrade/monte_carlo.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <Eigen/QR>

#include "fedtrade/numeric.h"

namespace fedtrade::monte_carlo {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 TrialEngine(std::uint64_t seed, std::int64_t trial) {
  const std::uint64_t a = SplitMix64(seed);
  const std::uint64_t b = SplitMix64(a ^ static_cast<std::uint64_t>(trial));
  std::seed_seq seq{static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32)};
  return std::mt19937_64(seq);
}

std::vector<double> RunTrials(
    const Options& opt, int stats,
    const std::function<void(std::mt19937_64&, double*)>& trial) {
  if (opt.trials < 1) throw std::domain_error("trials must be >= 1");
  std::vector<double> out(static_cast<size_t>(opt.trials) * stats, 0.0);
  int workers = opt.workers > 0
                    ? opt.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp<int>(workers, 1, 64);
  auto run_range = [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t t = lo; t < hi; ++t) {
      std::mt19937_64 engine = TrialEngine(opt.seed, t);
      trial(engine, out.data() + t * stats);
    }
  };
  if (workers == 1) {
    run_range(0, opt.trials);
    return out;
  }
  std::vector<std::thread> pool;
  const std::int64_t chunk = (opt.trials + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min<std::int64_t>(opt.trials, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(run_range, lo, hi);
  }
  for (auto& th : pool) th.join();
  return out;
}

SimulationResult Summarize(const std::vector<double>& values, int stats,
                           int col, const Options& opt, double analytic) {
  const std::int64_t n = opt.trials;
  NeumaierSum sum;
  for (std::int64_t t = 0; t < n; ++t) sum.Add(values[t * stats + col]);
  const double mean = sum.Value() / n;
  NeumaierSum sq;
  for (std::int64_t t = 0; t < n; ++t) {
    const double dev = values[t * stats + col] - mean;
    sq.Add(dev * dev);
  }
  SimulationResult r;
  r.trials = n;
  r.seed = opt.seed;
  r.empirical_mean = mean;
  r.analytic_reference = analytic;
  const double var = n > 1 ? sq.Value() / (n - 1) : 0.0;
  r.std_error = std::sqrt(var / n);
  if (r.std_error > 0.0) {
    r.z_score = (mean - analytic) / r.std_error;
  } else {
    r.z_score = mean == analytic ? 0.0
                                 : std::numeric_limits<double>::infinity();
  }
  return r;
}

DpMeanSimulation SimDpMean(const dp_mean::Setting& setting,
                           const NoiseAllocation& alloc, const Options& opt,
                           double true_mean) {
  setting.Validate();
  const int n_clients = setting.n_clients;
  if (alloc.size() != n_clients) {
    throw std::domain_error("SimDpMean: allocation length mismatch");
  }
  const double rho = dp_mean::Derive(setting).rho;
  const double sigma = setting.sigma;
  const long n = setting.n_samples;
  const VectorXd& alphas = alloc.alphas();
  const VectorXd& betas = alloc.betas();
  const double gamma_all = alloc.Gamma();

  auto trial = [&](std::mt19937_64& eng, double* out) {
    std::binomial_distribution<long> heads(n, 0.5);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd local(n_clients), msg(n_clients);
    for (int k = 0; k < n_clients; ++k) {
      local[k] = true_mean + sigma * (2.0 * heads(eng) / n - 1.0);
      const double z = normal(eng);
      msg[k] = std::isinf(alphas[k]) ? 0.0 : local[k] + alphas[k] * z;
    }
    double weighted = 0.0;
    for (int k = 0; k < n_clients; ++k) {
      if (betas[k] > 0.0) weighted += betas[k] * msg[k];
    }
    for (int i = 0; i < n_clients; ++i) {
      const double gi = gamma_all - betas[i];
      const double others = betas[i] > 0.0 ? weighted - betas[i] * msg[i]
                                           : weighted;
      const double est = (rho * local[i] + others) / (gi + rho);
      out[i] = (est - true_mean) * (est - true_mean);
    }
  };
  const auto values = RunTrials(opt, n_clients, trial);

  DpMeanSimulation sim;
  sim.support_width_used = 2.0 * sigma;
  sim.support_width_overridden = setting.support_width != 2.0 * sigma;
  for (int i = 0; i < n_clients; ++i) {
    const double analytic = 1.0 / (alloc.GammaExcluding(i) + rho);
    sim.per_client.push_back(Summarize(values, n_clients, i, opt, analytic));
  }
  return sim;
}

double ReconstructionMse(const bayes_mean::Setting& setting,
                         const NoiseAllocation& alloc, int i) {
  const double rho = setting.Rho();
  const double n = static_cast<double>(setting.n_samples);
  const double gamma = alloc.GammaExcluding(i);
  const double leak2 =
      bayes_mean::LeakSquared(rho, setting.tau, alloc.betas()[i], gamma);
  // S - leak^2 with S = sigma^2 + 1/tau; S - (1/rho + 1/tau) = sigma^2 (n-1)/n.
  return setting.sigma * setting.sigma * (n - 1.0) / n + 1.0 / rho +
         1.0 / setting.tau - leak2;
}

BayesSimulation SimBayes(const bayes_mean::Setting& setting,
                         const NoiseAllocation& alloc, const Options& opt) {
  setting.Validate();
  const int n_clients = setting.n_clients;
  if (alloc.size() != n_clients) {
    throw std::domain_error("SimBayes: allocation length mismatch");
  }
  const double rho = setting.Rho();
  const double tau = setting.tau;
  const double sigma = setting.sigma;
  const long n = setting.n_samples;
  const VectorXd& alphas = alloc.alphas();
  const VectorXd& betas = alloc.betas();
  const double gamma_all = alloc.Gamma();

  auto trial = [&](std::mt19937_64& eng, double* out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double mu = normal(eng) / std::sqrt(tau);
    VectorXd local(n_clients), msg(n_clients), scatter(n_clients);
    for (int k = 0; k < n_clients; ++k) {
      local[k] = mu + normal(eng) / std::sqrt(rho);
      const double z = normal(eng);
      msg[k] = std::isinf(alphas[k]) ? 0.0 : local[k] + alphas[k] * z;
      if (n > 1) {
        std::chi_squared_distribution<double> chi2(static_cast<double>(n - 1));
        scatter[k] = sigma * sigma * chi2(eng) / n;
      } else {
        scatter[k] = 0.0;
      }
    }
    double weighted = 0.0;
    for (int k = 0; k < n_clients; ++k) {
      if (betas[k] > 0.0) weighted += betas[k] * msg[k];
    }
    for (int i = 0; i < n_clients; ++i) {
      const double gi = gamma_all - betas[i];
      const double s = betas[i] > 0.0 ? weighted - betas[i] * msg[i] : weighted;
      const double post = (s + rho * local[i]) / (gi + rho + tau);
      out[2 * i] = (post - mu) * (post - mu);

      const double q = rho * (gi + tau) / (gi + rho + tau);
      double guess;
      if (betas[i] >= rho) {
        guess = msg[i];
      } else if (betas[i] <= 0.0) {
        guess = s / (gi + tau);
      } else {
        const double a = 1.0 / (alphas[i] * alphas[i]);
        guess = (a * msg[i] + rho * s / (gi + rho + tau)) / (a + q);
      }
      out[2 * i + 1] = scatter[i] + (guess - local[i]) * (guess - local[i]);
    }
  };
  const int stats = 2 * n_clients;
  const auto values = RunTrials(opt, stats, trial);

  BayesSimulation sim;
  for (int i = 0; i < n_clients; ++i) {
    const double post = 1.0 / (alloc.GammaExcluding(i) + rho + tau);
    sim.posterior_mse.push_back(Summarize(values, stats, 2 * i, opt, post));
    sim.reconstruction_mse.push_back(Summarize(
        values, stats, 2 * i + 1, opt, ReconstructionMse(setting, alloc, i)));
  }
  return sim;
}

namespace {

VectorXd UniformOnSphere(std::mt19937_64& eng, int dim, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int j = 0; j < dim; ++j) v[j] = normal(eng);
    norm = v.norm();
  } while (norm == 0.0);
  return v * (radius / norm);
}

VectorXd UniformInBall(std::mt19937_64& eng, int dim, double radius) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = radius * std::pow(unif(eng), 1.0 / dim);
  return UniformOnSphere(eng, dim, r);
}

void ProjectToBall(VectorXd& w, double radius) {
  const double norm = w.norm();
  if (norm > radius) w *= radius / norm;
}

}  // namespace

QuadraticProblem MakeQuadraticProblem(int dim, double strong_convexity,
                                      double smoothness, double diameter,
                                      std::uint64_t seed) {
  if (dim < 1) throw std::domain_error("MakeQuadraticProblem: dim < 1");
  if (!(strong_convexity > 0.0) || strong_convexity > smoothness ||
      !(diameter > 0.0)) {
    throw std::domain_error("MakeQuadraticProblem: bad constants");
  }
  std::mt19937_64 eng(SplitMix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(strong_convexity, smoothness);

  QuadraticProblem p;
  p.dim = dim;
  p.eigenvalues.resize(dim);
  for (int j = 0; j < dim; ++j) p.eigenvalues[j] = unif(eng);
  p.eigenvalues[0] = strong_convexity;
  p.eigenvalues[dim - 1] = smoothness;

  Eigen::MatrixXd g(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) g(r, c) = normal(eng);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g)
                                .householderQ() *
                            Eigen::MatrixXd::Identity(dim, dim);
  p.hessian = q * p.eigenvalues.asDiagonal() * q.transpose();
  p.hessian = 0.5 * (p.hessian + p.hessian.transpose());
  p.domain_radius = diameter / 2.0;
  p.optimum = UniformInBall(eng, dim, diameter / 4.0);
  return p;
}

SgdSimulation SimSgd(const dp_sgd::Setting& setting,
                     const dp_sgd::Derived& derived, const VectorXd& alphas,
                     const QuadraticProblem& problem, const Options& opt) {
  setting.Validate();
  const int n_clients = setting.n_clients;
  const int dim = setting.dim;
  if (alphas.size() != n_clients) {
    throw std::domain_error("SimSgd: allocation length mismatch");
  }
  if (problem.dim != dim) throw std::domain_error("SimSgd: dim mismatch");

  SgdSimulation sim;
  sim.continuous_rounds = derived.rounds;
  sim.continuous_batch = derived.batch;
  sim.rounds = static_cast<int>(std::ceil(derived.rounds - 1e-12));
  sim.batch = setting.n_samples / sim.rounds;
  if (sim.batch < 1) throw std::domain_error("SimSgd: batch size is zero");
  const double sigma = setting.sigma;
  sim.rho = static_cast<double>(sim.batch) / (sigma * sigma);

  VectorXd betas(n_clients);
  for (int i = 0; i < n_clients; ++i) {
    betas[i] = BetaOfAlpha(alphas[i], sim.rho, dim);
  }
  sim.gamma = betas.sum();
  if (!(sim.gamma > 0.0)) throw std::domain_error("SimSgd: Gamma is zero");
  const VectorXd weights = betas / sim.gamma;
  sim.bound = dp_sgd::AccuracyBound(derived, sim.gamma,
                                    static_cast<double>(sim.rounds));

  // Step sizes from the deterministic y-sequence.
  std::vector<double> steps(sim.rounds);
  double y = derived.y0;
  const double chi = derived.chi;
  for (int t = 0; t < sim.rounds; ++t) {
    steps[t] = y / (setting.smoothness * (y + 1.0));
    y = (1.0 - chi * y / (y + 1.0)) * y;
  }

  const long n = setting.n_samples;
  const long batch = sim.batch;
  const int rounds = sim.rounds;
  auto trial = [&](std::mt19937_64& eng, double* out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    // Client i's sample j contributes gradient grad f(w) + xi_ij with xi_ij
    // uniform on the sphere of radius sigma.
    std::vector<Eigen::MatrixXd> sample_noise(n_clients);
    std::vector<std::vector<long>> order(n_clients);
    for (int i = 0; i < n_clients; ++i) {
      if (!(betas[i] > 0.0)) continue;
      sample_noise[i].resize(dim, n);
      for (long j = 0; j < n; ++j) {
        sample_noise[i].col(j) = UniformOnSphere(eng, dim, sigma);
      }
      order[i].resize(n);
      std::iota(order[i].begin(), order[i].end(), 0L);
      std::shuffle(order[i].begin(), order[i].end(), eng);
    }
    VectorXd w = UniformInBall(eng, dim, problem.domain_radius);
    VectorXd agg(dim), noise(dim);
    for (int t = 0; t < rounds; ++t) {
      const VectorXd grad = problem.hessian * (w - problem.optimum);
      agg.setZero();
      for (int i = 0; i < n_clients; ++i) {
        if (!(betas[i] > 0.0)) continue;
        noise.setZero();
        for (long j = 0; j < batch; ++j) {
          noise += sample_noise[i].col(order[i][t * batch + j]);
        }
        noise /= static_cast<double>(batch);
        if (alphas[i] > 0.0) {
          for (int c = 0; c < dim; ++c) noise[c] += alphas[i] * normal(eng);
        }
        agg += weights[i] * (grad + noise);
      }
      w -= steps[t] * agg;
      ProjectToBall(w, problem.domain_radius);
    }
    out[0] = (w - problem.optimum).squaredNorm();
  };
  const auto values = RunTrials(opt, 1, trial);
  sim.result = Summarize(values, 1, 0, opt, sim.bound);
  sim.within_bound =
      sim.result.empirical_mean <= sim.bound + 3.0 * sim.result.std_error;
  return sim;
}

}  // namespace fedtrade::monte_carlo
