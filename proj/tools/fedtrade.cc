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

// fedtrade <subcommand> --config <path> [--seed N] [--out <dir>]
//
// Prints one JSON object per line. Exit codes: 0 ok, 2 config error,
// 3 numeric contract violation, 1 anything else (I/O).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fedtrade/alt_utility.h"
#include "fedtrade/bayes_mean.h"
#include "fedtrade/config.h"
#include "fedtrade/dp_mean.h"
#include "fedtrade/dp_sgd.h"
#include "fedtrade/errors.h"
#include "fedtrade/experiment.h"
#include "fedtrade/monte_carlo.h"

namespace {

using fedtrade::ConfigError;
using fedtrade::ExperimentConfig;
using fedtrade::SettingKind;
using fedtrade::VectorXd;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void Emit(const json& j) { std::cout << j.dump() << "\n"; }

json Vec(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::vector<fedtrade::ClientPreference> FixedPrefs(const ExperimentConfig& c) {
  if (c.lambda_model.kind != fedtrade::LambdaModel::Kind::kFixed) {
    throw ConfigError("this subcommand needs lambda_model.kind = fixed");
  }
  std::vector<fedtrade::ClientPreference> prefs(c.lambda_model.values.size());
  for (size_t i = 0; i < prefs.size(); ++i) {
    prefs[i].lambda = c.lambda_model.values[i];
  }
  return prefs;
}

std::vector<double> DistinctLambdas(const ExperimentConfig& c) {
  const auto prefs = FixedPrefs(c);
  std::set<double> seen;
  std::vector<double> out;
  for (const auto& p : prefs) {
    if (seen.insert(p.lambda).second) out.push_back(p.lambda);
  }
  return out;
}

std::optional<fedtrade::NoiseAllocation> Allocation(const ExperimentConfig& c,
                                                    double rho, int dim = 1) {
  if (c.betas) {
    const VectorXd b = Eigen::Map<const VectorXd>(c.betas->data(),
                                                 c.betas->size());
    try {
      return fedtrade::NoiseAllocation::FromBetas(rho, b, dim);
    } catch (const std::domain_error& e) {
      throw ConfigError(std::string("allocation: ") + e.what());
    }
  }
  if (c.alphas) {
    std::vector<double> a = *c.alphas;
    return fedtrade::NoiseAllocation::FromAlphas(
        rho, Eigen::Map<const VectorXd>(a.data(), a.size()), dim);
  }
  return std::nullopt;
}

fedtrade::NoiseAllocation RequireAllocation(const ExperimentConfig& c,
                                            double rho, int dim = 1) {
  auto a = Allocation(c, rho, dim);
  if (!a) throw ConfigError("this subcommand needs an 'allocation' section");
  return *a;
}

void EmitParticipation(const fedtrade::ParticipationReport& r,
                       const std::vector<fedtrade::EvalPair>& evals) {
  for (int i = 0; i < r.size(); ++i) {
    json j = {{"op", "utilities"},       {"client", i},
              {"utility", r.utilities[i]}, {"baseline", r.baselines[i]},
              {"residual", r.residuals.size() ? r.residuals[i] : 0.0}};
    if (!evals.empty()) {
      j["err"] = evals[i].err;
      j["leak"] = evals[i].leak;
    }
    Emit(j);
  }
  Emit({{"op", "participation"},
        {"beneficial", r.beneficial()},
        {"violations", r.violations}});
}

json FeasibilityJson(const fedtrade::FeasibilityReport& r) {
  json j = {{"feasible", r.feasible},
            {"coefficients", Vec(r.coefficients)},
            {"coefficient_sum", r.coefficient_sum},
            {"witness_b", r.witness_b},
            {"witness_b_max", r.witness_b_max}};
  if (r.witness_betas) j["witness_betas"] = Vec(*r.witness_betas);
  return j;
}

json SgdDerivedJson(const fedtrade::dp_sgd::Derived& d) {
  return {{"op", "derive"}, {"chi", d.chi},   {"y0", d.y0},
          {"T", d.rounds},  {"b", d.batch},   {"rho", d.rho},
          {"kappa", d.kappa}, {"psi", Vec(d.psi)}};
}

void RunFeasibility(const ExperimentConfig& c) {
  const auto prefs = FixedPrefs(c);
  switch (c.setting) {
    case SettingKind::kDpMean: {
      const auto d = fedtrade::dp_mean::Derive(c.dp_mean);
      Emit({{"op", "derive"}, {"rho", d.rho}, {"kappa", d.kappa}});
      json j = FeasibilityJson(fedtrade::dp_mean::Existence(c.dp_mean, d, prefs));
      j["op"] = "existence";
      Emit(j);
      if (auto alloc = Allocation(c, d.rho)) {
        std::vector<fedtrade::EvalPair> evals;
        for (int i = 0; i < c.dp_mean.n_clients; ++i) {
          evals.push_back(fedtrade::dp_mean::ErrLeak(c.dp_mean, d, *alloc, i));
        }
        EmitParticipation(
            fedtrade::dp_mean::Utilities(c.dp_mean, d, *alloc, prefs), evals);
      }
      break;
    }
    case SettingKind::kDpSgd: {
      const auto d = fedtrade::dp_sgd::Derive(c.dp_sgd, prefs);
      Emit(SgdDerivedJson(d));
      const auto r = fedtrade::dp_sgd::Existence(d);
      json j = FeasibilityJson(r.base);
      j["op"] = "existence";
      j["x_star"] = r.x_star;
      j["g_max"] = r.g_max;
      j["sufficient_test"] = r.sufficient_test;
      j["necessary_test"] = r.necessary_test;
      Emit(j);
      if (auto alloc = Allocation(c, d.rho, d.dim)) {
        Emit({{"op", "accuracy_bound"},
              {"m", d.rounds},
              {"bound", fedtrade::dp_sgd::AccuracyBound(d, *alloc, d.rounds)}});
        std::vector<fedtrade::EvalPair> evals;
        for (int i = 0; i < d.n_clients; ++i) {
          evals.push_back(fedtrade::dp_sgd::ErrLeak(d, *alloc, i));
        }
        EmitParticipation(fedtrade::dp_sgd::Utilities(d, *alloc, prefs), evals);
      }
      break;
    }
    case SettingKind::kBayesMean: {
      json j = FeasibilityJson(
          fedtrade::bayes_mean::FirstOrderExistence(c.bayes_mean, prefs));
      j["op"] = "first_order_existence";
      Emit(j);
      if (auto alloc = Allocation(c, c.bayes_mean.Rho())) {
        std::vector<fedtrade::EvalPair> evals;
        for (int i = 0; i < c.bayes_mean.n_clients; ++i) {
          evals.push_back(fedtrade::bayes_mean::ErrLeak(c.bayes_mean, *alloc, i));
        }
        EmitParticipation(
            fedtrade::bayes_mean::Utilities(c.bayes_mean, *alloc, prefs), evals);
      }
      break;
    }
    case SettingKind::kAltUtility:
      throw ConfigError("feasibility: use the altcheck subcommand for altutility");
  }
}

void EmitGammaSearch(const char* family, const fedtrade::GammaSearchResult& g) {
  Emit({{"op", "maximize_gamma"},
        {"family", family},
        {"b_star", g.b_star},
        {"gamma", g.gamma},
        {"ratio", g.ratio}});
}

void RunOptimize(const ExperimentConfig& c) {
  const auto prefs = FixedPrefs(c);
  switch (c.setting) {
    case SettingKind::kDpMean: {
      const auto d = fedtrade::dp_mean::Derive(c.dp_mean);
      for (double lambda : DistinctLambdas(c)) {
        const auto o = fedtrade::dp_mean::SymmetricOptimumOf(c.dp_mean, d, lambda);
        json j = {{"op", "symmetric_optimum"}, {"lambda", lambda},
                  {"profitable", o.profitable}, {"beta_star", o.beta_star},
                  {"gain", o.gain}};
        if (o.alpha_sq_star) j["alpha_sq_star"] = *o.alpha_sq_star;
        Emit(j);
      }
      for (auto f : {fedtrade::Family::kSymmetric, fedtrade::Family::kPersonalized}) {
        EmitGammaSearch(fedtrade::FamilyName(f),
                        fedtrade::dp_mean::MaximizeGamma(c.dp_mean, d, prefs, f,
                                                         c.grid_points));
      }
      break;
    }
    case SettingKind::kDpSgd: {
      const auto d = fedtrade::dp_sgd::Derive(c.dp_sgd, prefs);
      for (double lambda : DistinctLambdas(c)) {
        const auto o = fedtrade::dp_sgd::SymmetricOptimumOf(d, lambda);
        json j = {{"op", "symmetric_optimum"}, {"lambda", lambda},
                  {"profitable", o.profitable}, {"beta_star", o.beta_star},
                  {"gain", o.gain}};
        if (o.alpha_sq_star) j["alpha_sq_star"] = *o.alpha_sq_star;
        Emit(j);
      }
      break;
    }
    case SettingKind::kBayesMean: {
      const auto& s = c.bayes_mean;
      Emit({{"op", "thresholds"},
            {"unprofitable_below", fedtrade::bayes_mean::UnprofitableBelow(s)},
            {"always_profitable_above",
             fedtrade::bayes_mean::AlwaysProfitableAbove(s)}});
      for (double lambda : DistinctLambdas(c)) {
        const auto o = fedtrade::bayes_mean::SymmetricOptimumOf(s, lambda);
        json j = {{"op", "symmetric_optimum"}, {"lambda", lambda},
                  {"case", o.case_id}, {"beta_star", o.beta_star},
                  {"gain", o.gain}};
        if (o.beta_test) j["beta_test"] = *o.beta_test;
        Emit(j);
        const auto a = fedtrade::bayes_mean::AsymptoticBeta(
            s, lambda, fedtrade::bayes_mean::Regime::kLargeN);
        json k = {{"op", "asymptotic_beta"}, {"regime", "large_N"},
                  {"lambda", lambda}, {"decided", a.decided},
                  {"collaborate", a.collaborate}};
        if (a.beta_approx) k["beta_approx"] = *a.beta_approx;
        if (a.gain_approx) k["gain_approx"] = *a.gain_approx;
        Emit(k);
      }
      for (auto f : {fedtrade::Family::kSymmetric, fedtrade::Family::kPersonalized}) {
        EmitGammaSearch(fedtrade::FamilyName(f),
                        fedtrade::bayes_mean::MaximizeGamma(s, prefs, f,
                                                            c.grid_points));
      }
      break;
    }
    case SettingKind::kAltUtility:
      throw ConfigError("optimize: use the altcheck subcommand for altutility");
  }
}

json SimJson(const char* quantity, int client,
             const fedtrade::monte_carlo::SimulationResult& r) {
  return {{"op", "simulate"},       {"quantity", quantity},
          {"client", client},       {"empirical_mean", r.empirical_mean},
          {"std_error", r.std_error}, {"trials", r.trials},
          {"seed", r.seed},         {"analytic", r.analytic_reference},
          {"z_score", r.z_score}};
}

std::string SimCsvRow(const char* quantity, int client,
                      const fedtrade::monte_carlo::SimulationResult& r) {
  using fedtrade::experiment::FormatNumber;
  return quantity + std::string(",") + std::to_string(client) + "," +
         FormatNumber(r.empirical_mean) + "," + FormatNumber(r.std_error) + "," +
         std::to_string(r.trials) + "," + std::to_string(r.seed) + "," +
         FormatNumber(r.analytic_reference) + "," + FormatNumber(r.z_score) +
         "\n";
}

void RunSimulate(const ExperimentConfig& c, const std::string& out_dir) {
  fedtrade::monte_carlo::Options opt;
  opt.trials = c.trials;
  opt.seed = c.seed;
  opt.workers = c.workers;
  std::string csv =
      "quantity,client,empirical_mean,std_error,trials,seed,analytic,z_score\n";
  auto add = [&](const char* q, int i,
                 const fedtrade::monte_carlo::SimulationResult& r) {
    Emit(SimJson(q, i, r));
    csv += SimCsvRow(q, i, r);
  };
  switch (c.setting) {
    case SettingKind::kDpMean: {
      const auto d = fedtrade::dp_mean::Derive(c.dp_mean);
      const auto alloc = RequireAllocation(c, d.rho);
      const auto sim =
          fedtrade::monte_carlo::SimDpMean(c.dp_mean, alloc, opt, c.true_mean);
      if (sim.support_width_overridden) {
        Emit({{"op", "note"},
              {"support_width_override", sim.support_width_used}});
      }
      for (int i = 0; i < c.dp_mean.n_clients; ++i) {
        add("mse", i, sim.per_client[i]);
      }
      break;
    }
    case SettingKind::kBayesMean: {
      const auto alloc = RequireAllocation(c, c.bayes_mean.Rho());
      const auto sim = fedtrade::monte_carlo::SimBayes(c.bayes_mean, alloc, opt);
      for (int i = 0; i < c.bayes_mean.n_clients; ++i) {
        add("posterior_mse", i, sim.posterior_mse[i]);
        add("reconstruction_mse", i, sim.reconstruction_mse[i]);
      }
      break;
    }
    case SettingKind::kDpSgd: {
      std::vector<fedtrade::ClientPreference> prefs(c.dp_sgd.n_clients);
      if (c.lambda_model.kind == fedtrade::LambdaModel::Kind::kFixed) {
        prefs = FixedPrefs(c);
      }
      const auto d = fedtrade::dp_sgd::Derive(c.dp_sgd, prefs);
      const auto alloc = RequireAllocation(c, d.rho, d.dim);
      const auto problem = fedtrade::monte_carlo::MakeQuadraticProblem(
          c.dp_sgd.dim, c.dp_sgd.strong_convexity, c.dp_sgd.smoothness,
          c.dp_sgd.diameter, c.problem_seed);
      const auto sim = fedtrade::monte_carlo::SimSgd(c.dp_sgd, d, alloc.alphas(),
                                                     problem, opt);
      json j = SimJson("sq_distance", -1, sim.result);
      j["rounds"] = sim.rounds;
      j["batch"] = sim.batch;
      j["continuous_rounds"] = sim.continuous_rounds;
      j["continuous_batch"] = sim.continuous_batch;
      j["rho"] = sim.rho;
      j["gamma"] = sim.gamma;
      j["bound"] = sim.bound;
      j["within_bound"] = sim.within_bound;
      Emit(j);
      csv += SimCsvRow("sq_distance", -1, sim.result);
      break;
    }
    case SettingKind::kAltUtility:
      throw ConfigError("simulate: altutility has no simulator");
  }
  std::filesystem::create_directories(out_dir);
  const std::string path =
      (std::filesystem::path(out_dir) / "simulate.csv").string();
  fedtrade::experiment::WriteFile(path, csv);
  Emit({{"op", "written"}, {"path", path}});
}

void RunExperimentCmd(const ExperimentConfig& c, const std::string& out_dir) {
  const auto record = fedtrade::experiment::RunExperiment(c, c.workers);
  for (const auto& a : record.aggregates) {
    json j = {{"op", "experiment"},
              {"family", fedtrade::FamilyName(a.family)},
              {"mean_ratio", a.mean_ratio},
              {"std_ratio", a.std_ratio},
              {"reps", a.reps},
              {"seed", a.seed}};
    j["m"] = a.m ? json(*a.m) : json(nullptr);
    Emit(j);
  }
  fedtrade::experiment::EmitOutputs(record, out_dir);
  Emit({{"op", "written"}, {"dir", out_dir}, {"grid_points", c.grid_points}});
}

void RunAltCheck(const ExperimentConfig& c) {
  if (c.setting != SettingKind::kAltUtility) {
    throw ConfigError("altcheck: setting must be altutility");
  }
  if (c.alphas) {
    const auto prefs = FixedPrefs(c);
    const VectorXd a = Eigen::Map<const VectorXd>(c.alphas->data(),
                                                 c.alphas->size());
    const auto r = c.alt_protocol == "mean"
                       ? fedtrade::alt_utility::AltMeanFeasibility(c.dp_mean,
                                                                   prefs, a)
                       : fedtrade::alt_utility::AltSgdFeasibility(c.alt_sgd,
                                                                  prefs, a);
    Emit({{"op", "alt_feasibility"}, {"protocol", c.alt_protocol}});
    EmitParticipation(r, {});
  } else if (c.betas) {
    throw ConfigError("altcheck: give the allocation as alphas");
  }
  if (c.chung) {
    const auto& p = *c.chung;
    const auto r =
        fedtrade::alt_utility::ChungCheck(p.c, p.c1, p.n0, p.horizon, p.b_start);
    Emit({{"op", "chung_check"},
          {"c", p.c},
          {"c1", p.c1},
          {"n0", p.n0},
          {"horizon", p.horizon},
          {"max_violation", r.max_violation},
          {"k_const", r.k_const},
          {"n_times_b_n", r.last_scaled}});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accuracy-privacy trade-off analytics for collaborative learning"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"feasibility", "Existence tests and participation checks"},
      {"optimize", "Symmetric optima and Gamma search"},
      {"simulate", "Monte Carlo validation of the analytic formulas"},
      {"experiment", "Personalized vs symmetric Gamma experiment"},
      {"altcheck", "Alternative-utility feasibility and recurrence check"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "YAML config file")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out_dir, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig c = fedtrade::LoadConfig(config_path);
    if (seed) c.seed = *seed;
    if (out_dir.empty()) out_dir = c.output;
    if (cmd == "feasibility") {
      RunFeasibility(c);
    } else if (cmd == "optimize") {
      RunOptimize(c);
    } else if (cmd == "simulate") {
      RunSimulate(c, out_dir);
    } else if (cmd == "experiment") {
      RunExperimentCmd(c, out_dir);
    } else {
      RunAltCheck(c);
    }
  } catch (const ConfigError& e) {
    Emit({{"error", "config"}, {"message", e.what()}});
    return kExitConfig;
  } catch (const fedtrade::ContractViolation& e) {
    Emit({{"error", "numeric"}, {"message", e.what()}});
    return kExitNumeric;
  } catch (const std::domain_error& e) {
    Emit({{"error", "numeric"}, {"message", e.what()}});
    return kExitNumeric;
  } catch (const std::out_of_range& e) {
    Emit({{"error", "numeric"}, {"message", e.what()}});
    return kExitNumeric;
  } catch (const std::exception& e) {
    Emit({{"error", "io"}, {"message", e.what()}});
    return kExitIo;
  }
  return kExitOk;
}
