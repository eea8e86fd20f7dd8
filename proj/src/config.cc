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

#include "fedtrade/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "fedtrade/errors.h"

namespace fedtrade {
namespace {

void CheckKeys(const YAML::Node& node, const std::string& where,
               const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T Get(const YAML::Node& node, const std::string& key, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

template <typename T>
T GetOr(const YAML::Node& node, const std::string& key, const T& fallback,
        const std::string& where) {
  if (!node || !node[key]) return fallback;
  return Get<T>(node, key, where);
}

SettingKind ParseSetting(const std::string& s) {
  if (s == "dpmean") return SettingKind::kDpMean;
  if (s == "dpsgd") return SettingKind::kDpSgd;
  if (s == "bayesmean") return SettingKind::kBayesMean;
  if (s == "altutility") return SettingKind::kAltUtility;
  throw ConfigError("setting: unknown value '" + s + "'");
}

void ParseParameters(const YAML::Node& p, ExperimentConfig& c) {
  const std::string where = "parameters";
  CheckKeys(p, where,
            {"n_clients", "n_samples", "sigma", "support_width", "tau", "dim",
             "smoothness", "strong_convexity", "diameter", "grad_support",
             "var_const", "var_slope", "tail_const", "protocol"});
  const int n_clients = Get<int>(p, "n_clients", where);
  const long n_samples = Get<long>(p, "n_samples", where);
  const double sigma = Get<double>(p, "sigma", where);
  switch (c.setting) {
    case SettingKind::kDpMean:
      c.dp_mean = {n_clients, n_samples, sigma,
                   Get<double>(p, "support_width", where)};
      break;
    case SettingKind::kBayesMean:
      c.bayes_mean = {n_clients, n_samples, sigma, Get<double>(p, "tau", where)};
      break;
    case SettingKind::kAltUtility:
      c.alt_protocol = GetOr<std::string>(p, "protocol", "mean", where);
      if (c.alt_protocol == "mean") {
        c.dp_mean = {n_clients, n_samples, sigma,
                     Get<double>(p, "support_width", where)};
        break;
      }
      if (c.alt_protocol != "sgd") {
        throw ConfigError(where + ": protocol must be 'mean' or 'sgd'");
      }
      c.alt_sgd.var_const = Get<double>(p, "var_const", where);
      c.alt_sgd.var_slope = GetOr<double>(p, "var_slope", 0.0, where);
      c.alt_sgd.tail_const = GetOr<double>(p, "tail_const", 0.0, where);
      [[fallthrough]];
    case SettingKind::kDpSgd: {
      dp_sgd::Setting s;
      s.n_clients = n_clients;
      s.n_samples = n_samples;
      s.sigma = sigma;
      s.dim = Get<int>(p, "dim", where);
      s.smoothness = Get<double>(p, "smoothness", where);
      s.strong_convexity = Get<double>(p, "strong_convexity", where);
      s.diameter = Get<double>(p, "diameter", where);
      s.grad_support = Get<double>(p, "grad_support", where);
      if (c.setting == SettingKind::kDpSgd) {
        c.dp_sgd = s;
      } else {
        c.alt_sgd.base = s;
      }
      break;
    }
  }
}

void ValidateSetting(const ExperimentConfig& c) {
  try {
    switch (c.setting) {
      case SettingKind::kDpMean:
        c.dp_mean.Validate();
        break;
      case SettingKind::kBayesMean:
        c.bayes_mean.Validate();
        break;
      case SettingKind::kDpSgd:
        c.dp_sgd.Validate();
        break;
      case SettingKind::kAltUtility:
        if (c.alt_protocol == "mean") {
          c.dp_mean.Validate();
        } else {
          c.alt_sgd.base.Validate();
        }
        break;
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("parameters: ") + e.what());
  }
}

std::vector<double> GetVector(const YAML::Node& node, const std::string& key,
                              const std::string& where) {
  const YAML::Node v = node[key];
  if (!v.IsSequence()) throw ConfigError(where + ": '" + key + "' must be a list");
  std::vector<double> out;
  for (const auto& x : v) {
    try {
      out.push_back(x.as<double>());
    } catch (const YAML::Exception&) {
      throw ConfigError(where + ": non-numeric entry in '" + key + "'");
    }
  }
  return out;
}

}  // namespace

const char* SettingName(SettingKind kind) {
  switch (kind) {
    case SettingKind::kDpMean:
      return "dpmean";
    case SettingKind::kDpSgd:
      return "dpsgd";
    case SettingKind::kBayesMean:
      return "bayesmean";
    case SettingKind::kAltUtility:
      return "altutility";
  }
  return "?";
}

int ExperimentConfig::NumClients() const {
  switch (setting) {
    case SettingKind::kDpMean:
      return dp_mean.n_clients;
    case SettingKind::kBayesMean:
      return bayes_mean.n_clients;
    case SettingKind::kDpSgd:
      return dp_sgd.n_clients;
    case SettingKind::kAltUtility:
      return alt_protocol == "mean" ? dp_mean.n_clients
                                    : alt_sgd.base.n_clients;
  }
  return 0;
}

std::uint64_t Fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig ParseConfig(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("yaml: ") + e.what());
  }
  const std::string where = "config";
  CheckKeys(root, where,
            {"schema_version", "setting", "parameters", "lambda_model",
             "repetitions", "grid_points", "seed", "output", "allocation",
             "simulation", "chung"});
  ExperimentConfig c;
  c.schema_version = Get<int>(root, "schema_version", where);
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("schema_version: unsupported value");
  }
  c.setting = ParseSetting(Get<std::string>(root, "setting", where));
  if (!root["parameters"]) throw ConfigError("config: missing 'parameters'");
  ParseParameters(root["parameters"], c);
  ValidateSetting(c);

  if (const YAML::Node lm = root["lambda_model"]) {
    CheckKeys(lm, "lambda_model", {"kind", "values", "locations"});
    const std::string kind = Get<std::string>(lm, "kind", "lambda_model");
    if (kind == "fixed") {
      c.lambda_model.kind = LambdaModel::Kind::kFixed;
      c.lambda_model.values = GetVector(lm, "values", "lambda_model");
      if (static_cast<int>(c.lambda_model.values.size()) != c.NumClients()) {
        throw ConfigError("lambda_model: need one value per client");
      }
      for (double v : c.lambda_model.values) {
        if (!(v >= 0.0)) throw ConfigError("lambda_model: values must be >= 0");
      }
    } else if (kind == "lognormal") {
      c.lambda_model.kind = LambdaModel::Kind::kLognormal;
      c.lambda_model.locations =
          lm["locations"] ? GetVector(lm, "locations", "lambda_model")
                          : std::vector<double>{-2, -1, 0, 1, 2, 3};
      if (c.lambda_model.locations.empty()) {
        throw ConfigError("lambda_model: empty locations");
      }
    } else {
      throw ConfigError("lambda_model: kind must be 'fixed' or 'lognormal'");
    }
  } else {
    throw ConfigError("config: missing 'lambda_model'");
  }

  c.repetitions = GetOr<long>(root, "repetitions", 1000, where);
  if (c.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  c.grid_points = GetOr<int>(root, "grid_points", 512, where);
  if (c.grid_points < 2) throw ConfigError("grid_points must be >= 2");
  c.seed = GetOr<std::uint64_t>(root, "seed", 1, where);
  c.output = GetOr<std::string>(root, "output", "results", where);

  if (const YAML::Node a = root["allocation"]) {
    CheckKeys(a, "allocation", {"betas", "alphas"});
    if (a["betas"] && a["alphas"]) {
      throw ConfigError("allocation: give either betas or alphas");
    }
    const int n = c.NumClients();
    if (a["betas"]) c.betas = GetVector(a, "betas", "allocation");
    if (a["alphas"]) {
      c.alphas = GetVector(a, "alphas", "allocation");
      for (double& v : *c.alphas) {
        if (v < 0.0) throw ConfigError("allocation: alphas must be >= 0");
      }
    }
    const auto& v = c.betas ? *c.betas : *c.alphas;
    if (static_cast<int>(v.size()) != n) {
      throw ConfigError("allocation: need one entry per client");
    }
  }

  if (const YAML::Node s = root["simulation"]) {
    CheckKeys(s, "simulation", {"trials", "workers", "true_mean", "problem_seed"});
    c.trials = GetOr<std::int64_t>(s, "trials", 100000, "simulation");
    if (c.trials < 1) throw ConfigError("simulation: trials must be >= 1");
    c.workers = GetOr<int>(s, "workers", 0, "simulation");
    c.true_mean = GetOr<double>(s, "true_mean", 0.0, "simulation");
    c.problem_seed = GetOr<std::uint64_t>(s, "problem_seed", 1, "simulation");
  }

  if (const YAML::Node ch = root["chung"]) {
    CheckKeys(ch, "chung", {"c", "c1", "n0", "horizon", "b_start"});
    ChungParams p;
    p.c = Get<int>(ch, "c", "chung");
    p.c1 = Get<double>(ch, "c1", "chung");
    p.n0 = Get<long>(ch, "n0", "chung");
    p.horizon = Get<long>(ch, "horizon", "chung");
    p.b_start = GetOr<double>(ch, "b_start", 1.0, "chung");
    c.chung = p;
  }

  c.source_hash = Fnv1a64(text);
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

}  // namespace fedtrade
