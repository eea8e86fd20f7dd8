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

// YAML experiment configuration.

#ifndef FEDTRADE_CONFIG_H_
#define FEDTRADE_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedtrade/alt_utility.h"
#include "fedtrade/bayes_mean.h"
#include "fedtrade/dp_mean.h"
#include "fedtrade/dp_sgd.h"

namespace fedtrade {

inline constexpr int kSchemaVersion = 1;

enum class SettingKind { kDpMean, kDpSgd, kBayesMean, kAltUtility };

const char* SettingName(SettingKind kind);

struct LambdaModel {
  enum class Kind { kFixed, kLognormal } kind = Kind::kFixed;
  std::vector<double> values;     // fixed: one per client
  std::vector<double> locations;  // lognormal: m grid, scale fixed to 1
};

struct ChungParams {
  int c = 4;
  double c1 = 1.0;
  long n0 = 5;
  long horizon = 100000;
  double b_start = 1.0;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  SettingKind setting = SettingKind::kDpMean;

  dp_mean::Setting dp_mean;
  dp_sgd::Setting dp_sgd;
  bayes_mean::Setting bayes_mean;
  alt_utility::AltSgdSetting alt_sgd;
  std::string alt_protocol = "mean";  // mean | sgd

  LambdaModel lambda_model;
  long repetitions = 1000;
  int grid_points = 512;
  std::uint64_t seed = 1;
  std::string output = "results";

  std::optional<std::vector<double>> betas;
  std::optional<std::vector<double>> alphas;

  std::int64_t trials = 100000;
  int workers = 0;
  double true_mean = 0.0;
  std::uint64_t problem_seed = 1;
  std::optional<ChungParams> chung;

  std::uint64_t source_hash = 0;

  int NumClients() const;
};

// Throws ConfigError on malformed input.
ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfig(const std::string& path);

std::uint64_t Fnv1a64(const std::string& bytes);

}  // namespace fedtrade

#endif  // FEDTRADE_CONFIG_H_
