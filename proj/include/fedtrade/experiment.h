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

// Accuracy-maximizing experiment: sample preferences, search the largest
// mutually beneficial Gamma per family, aggregate the ratios.

#ifndef FEDTRADE_EXPERIMENT_H_
#define FEDTRADE_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedtrade/config.h"
#include "fedtrade/feasibility.h"

namespace fedtrade::experiment {

struct RepetitionRow {
  std::optional<double> m;
  Family family = Family::kSymmetric;
  long rep = 0;
  double b_star = 0.0;
  double gamma = 0.0;
  double ratio = 0.0;
};

struct AggregateRow {
  std::optional<double> m;
  Family family = Family::kSymmetric;
  double mean_ratio = 0.0;
  double std_ratio = 0.0;  // standard deviation of the mean
  long reps = 0;
  std::uint64_t seed = 0;
};

struct ExperimentRecord {
  std::uint64_t config_hash = 0;
  std::string setting;
  int grid_points = 0;
  std::vector<RepetitionRow> rows;
  std::vector<AggregateRow> aggregates;
};

// Supports the dpmean and bayesmean settings.
ExperimentRecord RunExperiment(const ExperimentConfig& config, int workers = 0);

std::string FormatNumber(double x);
std::string AggregatesCsv(const ExperimentRecord& record);
std::string RowsCsv(const ExperimentRecord& record);
std::string Svg(const ExperimentRecord& record);
// Parses the aggregate CSV written by AggregatesCsv.
std::vector<AggregateRow> ParseAggregatesCsv(const std::string& text);

// Writes <dir>/<stem>.csv, <dir>/<stem>_reps.csv and <dir>/<stem>.svg.
// Throws std::runtime_error with the path on I/O failure.
void EmitOutputs(const ExperimentRecord& record, const std::string& dir,
                 const std::string& stem = "experiment");

void WriteFile(const std::string& path, const std::string& contents);

}  // namespace fedtrade::experiment

#endif  // FEDTRADE_EXPERIMENT_H_
