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

#include "fedtrade/experiment.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "fedtrade/bayes_mean.h"
#include "fedtrade/dp_mean.h"
#include "fedtrade/errors.h"
#include "fedtrade/monte_carlo.h"
#include "fedtrade/numeric.h"

namespace fedtrade::experiment {
namespace {

constexpr Family kFamilies[] = {Family::kSymmetric, Family::kPersonalized};

struct RepOutcome {
  GammaSearchResult result[2];
};

RepOutcome RunOne(const ExperimentConfig& c,
                  const std::vector<ClientPreference>& prefs) {
  RepOutcome out;
  for (int f = 0; f < 2; ++f) {
    if (c.setting == SettingKind::kDpMean) {
      const auto d = dp_mean::Derive(c.dp_mean);
      out.result[f] =
          dp_mean::MaximizeGamma(c.dp_mean, d, prefs, kFamilies[f], c.grid_points);
    } else {
      out.result[f] = bayes_mean::MaximizeGamma(c.bayes_mean, prefs,
                                                kFamilies[f], c.grid_points);
    }
  }
  return out;
}

std::vector<ClientPreference> SamplePreferences(const ExperimentConfig& c,
                                                int group, long rep) {
  const int n = c.NumClients();
  std::vector<ClientPreference> prefs(n);
  if (c.lambda_model.kind == LambdaModel::Kind::kFixed) {
    for (int i = 0; i < n; ++i) prefs[i].lambda = c.lambda_model.values[i];
    return prefs;
  }
  std::mt19937_64 eng = monte_carlo::TrialEngine(
      monte_carlo::SplitMix64(c.seed + static_cast<std::uint64_t>(group)), rep);
  std::normal_distribution<double> omega(c.lambda_model.locations[group], 1.0);
  for (int i = 0; i < n; ++i) prefs[i].lambda = std::exp(omega(eng));
  return prefs;
}

std::string FormatM(const std::optional<double>& m) {
  return m ? FormatNumber(*m) : std::string();
}

}  // namespace

std::string FormatNumber(double x) { return fmt::format("{:.17g}", x); }

ExperimentRecord RunExperiment(const ExperimentConfig& c, int workers) {
  if (c.setting != SettingKind::kDpMean &&
      c.setting != SettingKind::kBayesMean) {
    throw ConfigError(std::string("experiment: setting '") +
                      SettingName(c.setting) +
                      "' is not supported (use dpmean or bayesmean)");
  }
  ExperimentRecord record;
  record.config_hash = c.source_hash;
  record.setting = SettingName(c.setting);
  record.grid_points = c.grid_points;

  std::vector<std::optional<double>> groups;
  if (c.lambda_model.kind == LambdaModel::Kind::kFixed) {
    groups.push_back(std::nullopt);
  } else {
    for (double m : c.lambda_model.locations) groups.push_back(m);
  }

  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
  }
  workers = std::clamp(workers, 1, 64);

  const long reps = c.repetitions;
  for (size_t g = 0; g < groups.size(); ++g) {
    std::vector<RepOutcome> outcomes(reps);
    auto run_range = [&](long lo, long hi) {
      for (long r = lo; r < hi; ++r) {
        outcomes[r] = RunOne(c, SamplePreferences(c, static_cast<int>(g), r));
      }
    };
    if (workers == 1) {
      run_range(0, reps);
    } else {
      std::vector<std::thread> pool;
      const long chunk = (reps + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const long lo = w * chunk, hi = std::min(reps, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(run_range, lo, hi);
      }
      for (auto& t : pool) t.join();
    }
    for (int f = 0; f < 2; ++f) {
      NeumaierSum sum;
      for (long r = 0; r < reps; ++r) {
        const auto& res = outcomes[r].result[f];
        record.rows.push_back(
            {groups[g], kFamilies[f], r, res.b_star, res.gamma, res.ratio});
        sum.Add(res.ratio);
      }
      const double mean = sum.Value() / reps;
      NeumaierSum sq;
      for (long r = 0; r < reps; ++r) {
        const double dev = outcomes[r].result[f].ratio - mean;
        sq.Add(dev * dev);
      }
      const double sd = reps > 1 ? std::sqrt(sq.Value() / (reps - 1)) : 0.0;
      record.aggregates.push_back({groups[g], kFamilies[f], mean,
                                   sd / std::sqrt(static_cast<double>(reps)),
                                   reps, c.seed});
    }
  }
  return record;
}

std::string AggregatesCsv(const ExperimentRecord& record) {
  std::string out = "m,family,mean_ratio,std_ratio,reps,seed\n";
  for (const auto& a : record.aggregates) {
    out += fmt::format("{},{},{},{},{},{}\n", FormatM(a.m), FamilyName(a.family),
                       FormatNumber(a.mean_ratio), FormatNumber(a.std_ratio),
                       a.reps, a.seed);
  }
  return out;
}

std::string RowsCsv(const ExperimentRecord& record) {
  std::string out = "m,family,rep,b_star,gamma,ratio\n";
  for (const auto& r : record.rows) {
    out += fmt::format("{},{},{},{},{},{}\n", FormatM(r.m),
                       FamilyName(r.family), r.rep, FormatNumber(r.b_star),
                       FormatNumber(r.gamma), FormatNumber(r.ratio));
  }
  return out;
}

std::vector<AggregateRow> ParseAggregatesCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "m,family,mean_ratio,std_ratio,reps,seed") {
    throw std::runtime_error("csv: unexpected header");
  }
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw std::runtime_error("csv: bad row '" + line + "'");
    AggregateRow r;
    if (!f[0].empty()) r.m = std::stod(f[0]);
    if (f[1] == "symmetric") {
      r.family = Family::kSymmetric;
    } else if (f[1] == "personalized") {
      r.family = Family::kPersonalized;
    } else {
      throw std::runtime_error("csv: bad family '" + f[1] + "'");
    }
    r.mean_ratio = std::stod(f[2]);
    r.std_ratio = std::stod(f[3]);
    r.reps = std::stol(f[4]);
    r.seed = std::stoull(f[5]);
    rows.push_back(r);
  }
  return rows;
}

std::string Svg(const ExperimentRecord& record) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 20, kTop = 30,
                   kBottom = 50;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  double xmin = 0.0, xmax = 0.0;
  bool first = true;
  for (const auto& a : record.aggregates) {
    const double x = a.m.value_or(0.0);
    xmin = first ? x : std::min(xmin, x);
    xmax = first ? x : std::max(xmax, x);
    first = false;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - y) * ph; };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
      "width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      kW, kH, kW, kH);
  s += fmt::format("<!-- config_hash={:016x} setting={} grid_points={} -->\n",
                   record.config_hash, record.setting, record.grid_points);
  s += "<!-- data: m,family,mean_ratio,std_ratio,reps,seed\n";
  for (const auto& a : record.aggregates) {
    s += fmt::format("{},{},{},{},{},{}\n", FormatM(a.m), FamilyName(a.family),
                     FormatNumber(a.mean_ratio), FormatNumber(a.std_ratio),
                     a.reps, a.seed);
  }
  s += "-->\n";
  s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" "
                   "fill=\"white\"/>\n", kW, kH);
  s += fmt::format("<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" "
                   "font-size=\"14\" text-anchor=\"middle\">{}: mean "
                   "Gamma / (N rho)</text>\n", kW / 2, record.setting);
  // Axes and ticks.
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" "
                   "stroke=\"black\"/>\n", kLeft, kTop, kTop + ph);
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" "
                   "stroke=\"black\"/>\n", kLeft, kTop + ph, kLeft + pw);
  for (int k = 0; k <= 5; ++k) {
    const double y = k / 5.0;
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" "
                     "font-size=\"11\" text-anchor=\"end\">{:.1f}</text>\n",
                     kLeft - 6, sy(y) + 4, y);
  }
  std::vector<double> xs;
  for (const auto& a : record.aggregates) xs.push_back(a.m.value_or(0.0));
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs) {
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" "
                     "font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                     sx(x), kTop + ph + 16, FormatNumber(x));
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" "
                   "font-size=\"12\" text-anchor=\"middle\">m</text>\n",
                   kLeft + pw / 2, kH - 12);

  const char* colors[] = {"#1f77b4", "#d62728"};
  for (int f = 0; f < 2; ++f) {
    std::string points;
    std::string bars;
    for (const auto& a : record.aggregates) {
      if (a.family != kFamilies[f]) continue;
      const double x = sx(a.m.value_or(0.0));
      points += fmt::format("{:.2f},{:.2f} ", x, sy(a.mean_ratio));
      bars += fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" "
          "stroke=\"{3}\"/>\n",
          x, sy(std::min(1.0, a.mean_ratio + a.std_ratio)),
          sy(std::max(0.0, a.mean_ratio - a.std_ratio)), colors[f]);
      bars += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" "
                          "fill=\"{}\"/>\n", x, sy(a.mean_ratio), colors[f]);
    }
    if (!points.empty()) points.pop_back();
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" "
                     "points=\"{}\"/>\n", colors[f], points);
    s += bars;
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" "
                     "font-size=\"12\" fill=\"{}\">{}</text>\n",
                     kLeft + 10, kTop + 16 + 16 * f, colors[f],
                     FamilyName(kFamilies[f]));
  }
  s += "</svg>\n";
  return s;
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << contents;
  out.close();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void EmitOutputs(const ExperimentRecord& record, const std::string& dir,
                 const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory '" + dir +
                             "': " + ec.message());
  }
  const std::filesystem::path base(dir);
  WriteFile((base / (stem + ".csv")).string(), AggregatesCsv(record));
  WriteFile((base / (stem + "_reps.csv")).string(), RowsCsv(record));
  WriteFile((base / (stem + ".svg")).string(), Svg(record));
}

}  // namespace fedtrade::experiment
