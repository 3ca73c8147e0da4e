#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghrl/trainer/config.hpp"
#include "ghrl/trainer/eval.hpp"

namespace ghrl::trainer {

struct StudyCell {
  std::string label;
  TrainConfig config;  // seed is replaced per run
};

struct StudySpec {
  std::vector<StudyCell> cells;
  std::vector<std::uint64_t> seeds = default_seeds();
  std::string baseline = "baseline";  // label of the reference cell

  static std::vector<std::uint64_t> default_seeds();  // 100, 200, ..., 1500
  // Baseline, feedback-only and the four mechanisms at their best beta0.
  // `base` holds explicit config keys; mechanism defaults fill the rest.
  static StudySpec default_matrix(const nlohmann::json& base = nlohmann::json::object());
  // {"base": {config keys}, "seeds": [...], "baseline": label,
  //  "cells": [{"label": ..., config keys...}]}; no "cells" -> default_matrix.
  static StudySpec from_json(const nlohmann::json& j);
  static StudySpec load(const std::filesystem::path& path);
};

struct RunResult {
  std::string label;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TrajectoryMetrics aggregate;  // mean over the test windows
};

struct CellSummary {
  std::string label;
  std::string mechanism;
  double beta0 = 0.0;
  int runs = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;  // sample std over seeds, 0 for one run
  double dry_weight = 0.0;
  double heat = 0.0;
  double co2 = 0.0;
  double violation_hours = 0.0;
  // (cell - baseline) / |baseline| in percent; NaN without a baseline cell
  double rel_reward = 0.0;
  double rel_dry_weight = 0.0;
  double rel_heat = 0.0;
  double rel_co2 = 0.0;
};

struct StudyTable {
  std::vector<RunResult> runs;
  std::vector<CellSummary> cells;

  void write_runs_csv(std::ostream& out) const;
  void write_summary_csv(std::ostream& out) const;
  // Rows are quantities, columns are cells.
  void write_table_csv(std::ostream& out) const;
};

double relative_change(double value, double reference);

StudyTable summarize(const StudySpec& spec, std::vector<RunResult> runs);

// Every (cell, seed) run, `jobs` at a time. Run directories go under
// output_root/<label>/seed_<seed> when output_root is non-empty; the tables
// are written there too. A failing run is recorded and left out of the means.
StudyTable run_study(const StudySpec& spec, std::shared_ptr<const env::WeatherSeries> weather,
                     std::shared_ptr<const oracle::OptimalClimateTable> table, int jobs,
                     const std::filesystem::path& output_root);

}  // namespace ghrl::trainer
