#include "ghrl/trainer/study.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "ghrl/errors.hpp"
#include "ghrl/trainer/trainer.hpp"

namespace ghrl::trainer {

using nlohmann::json;

std::vector<std::uint64_t> StudySpec::default_seeds() {
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = 1; i <= 15; ++i) s.push_back(100 * i);
  return s;
}

namespace {

StudyCell make_cell(const std::string& label, json base, const json& overrides) {
  for (const auto& [k, v] : overrides.items()) base[k] = v;
  return {label, TrainConfig::from_json(base)};
}

}  // namespace

StudySpec StudySpec::default_matrix(const json& base) {
  StudySpec spec;
  auto add = [&](const std::string& label, const char* mechanism, double beta0) {
    spec.cells.push_back(make_cell(label, base, {{"mechanism", mechanism}, {"beta0", beta0}}));
  };
  add("baseline", "baseline", 0.0);
  add("feedback_only", "feedback_only_reward", 0.0);
  add("policy_shaping_precise_b0.2", "policy_shaping_precise", 0.2);
  add("policy_shaping_constraint_b0.1", "policy_shaping_constraint", 0.1);
  add("control_sharing_b0.05", "control_sharing", 0.05);
  add("reward_shaping_b0.2", "reward_shaping", 0.2);
  return spec;
}

StudySpec StudySpec::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("study file must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "base" && k != "seeds" && k != "baseline" && k != "cells") {
      throw ConfigError("unknown study key '" + k + "'");
    }
  }
  const json base = j.value("base", json::object());
  if (!base.is_object()) throw ConfigError("study 'base' must be an object");
  StudySpec spec;
  if (j.contains("cells")) {
    const json& cells = j.at("cells");
    if (!cells.is_array() || cells.empty()) throw ConfigError("study 'cells' must be a non-empty array");
    for (const json& c : cells) {
      if (!c.is_object() || !c.contains("label") || !c.at("label").is_string()) {
        throw ConfigError("every study cell needs a string 'label'");
      }
      json overrides = c;
      overrides.erase("label");
      spec.cells.push_back(make_cell(c.at("label").get<std::string>(), base, overrides));
    }
  } else {
    spec = default_matrix(base);
  }
  if (j.contains("seeds")) {
    spec.seeds.clear();
    for (const json& s : j.at("seeds")) {
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0) throw ConfigError("study seeds must be non-negative integers");
      spec.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (spec.seeds.empty()) throw ConfigError("study needs at least one seed");
  spec.baseline = j.value("baseline", std::string("baseline"));
  std::map<std::string, int> seen;
  for (const auto& c : spec.cells) {
    if (seen[c.label]++) throw ConfigError("duplicate study cell '" + c.label + "'");
  }
  return spec;
}

StudySpec StudySpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open study file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("study file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

double relative_change(double value, double reference) {
  if (reference == 0.0 || !std::isfinite(reference)) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (value - reference) / std::abs(reference);
}

StudyTable summarize(const StudySpec& spec, std::vector<RunResult> runs) {
  StudyTable table;
  table.runs = std::move(runs);
  for (const StudyCell& cell : spec.cells) {
    CellSummary s;
    s.label = cell.label;
    s.mechanism = interactive::to_string(cell.config.mechanism);
    s.beta0 = cell.config.beta0;
    std::vector<double> rewards;
    for (const RunResult& r : table.runs) {
      if (r.label != cell.label || !r.ok) continue;
      rewards.push_back(r.aggregate.cumulative_reward);
      s.dry_weight += r.aggregate.dry_weight;
      s.heat += r.aggregate.heat;
      s.co2 += r.aggregate.co2;
      s.violation_hours += r.aggregate.violation_hours;
    }
    s.runs = static_cast<int>(rewards.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (s.runs == 0) {
      s.reward_mean = s.reward_std = s.dry_weight = s.heat = s.co2 = s.violation_hours = nan;
    } else {
      const double n = s.runs;
      for (double r : rewards) s.reward_mean += r / n;
      double ss = 0.0;
      for (double r : rewards) ss += (r - s.reward_mean) * (r - s.reward_mean);
      s.reward_std = s.runs > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      s.dry_weight /= n;
      s.heat /= n;
      s.co2 /= n;
      s.violation_hours /= n;
    }
    table.cells.push_back(s);
  }
  const CellSummary* base = nullptr;
  for (const auto& c : table.cells) {
    if (c.label == spec.baseline) base = &c;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& c : table.cells) {
    c.rel_reward = base ? relative_change(c.reward_mean, base->reward_mean) : nan;
    c.rel_dry_weight = base ? relative_change(c.dry_weight, base->dry_weight) : nan;
    c.rel_heat = base ? relative_change(c.heat, base->heat) : nan;
    c.rel_co2 = base ? relative_change(c.co2, base->co2) : nan;
  }
  return table;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void StudyTable::write_runs_csv(std::ostream& out) const {
  out << "cell,seed,status,cumulative_reward_hfl_m2,dry_weight_kg_m2,heat_j_m2,co2_kg_m2,violation_hours\n";
  for (const RunResult& r : runs) {
    out << r.label << ',' << r.seed << ',';
    if (!r.ok) {
      std::string msg = r.error;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ' ';
      }
      out << "failed: " << msg << ",,,,,\n";
      continue;
    }
    out << "ok," << num(r.aggregate.cumulative_reward) << ',' << num(r.aggregate.dry_weight) << ','
        << num(r.aggregate.heat) << ',' << num(r.aggregate.co2) << ','
        << num(r.aggregate.violation_hours) << '\n';
  }
}

void StudyTable::write_summary_csv(std::ostream& out) const {
  out << "cell,mechanism,beta0,runs,reward_mean,reward_std,rel_change_reward_pct,dry_weight_kg_m2,"
         "rel_change_dry_weight_pct,heat_j_m2,rel_change_heat_pct,co2_kg_m2,rel_change_co2_pct,"
         "violation_hours\n";
  for (const CellSummary& c : cells) {
    out << c.label << ',' << c.mechanism << ',' << num(c.beta0) << ',' << c.runs << ','
        << num(c.reward_mean) << ',' << num(c.reward_std) << ',' << num(c.rel_reward) << ','
        << num(c.dry_weight) << ',' << num(c.rel_dry_weight) << ',' << num(c.heat) << ','
        << num(c.rel_heat) << ',' << num(c.co2) << ',' << num(c.rel_co2) << ','
        << num(c.violation_hours) << '\n';
  }
}

void StudyTable::write_table_csv(std::ostream& out) const {
  out << "quantity";
  for (const auto& c : cells) out << ',' << c.label;
  out << '\n';
  auto row = [&](const char* name, double CellSummary::*field) {
    out << name;
    for (const auto& c : cells) out << ',' << num(c.*field);
    out << '\n';
  };
  row("cumulative_reward_hfl_m2", &CellSummary::reward_mean);
  row("relative_change_to_baseline_pct", &CellSummary::rel_reward);
  row("dry_weight_kg_m2", &CellSummary::dry_weight);
  row("relative_change_dry_weight_pct", &CellSummary::rel_dry_weight);
  row("heat_j_m2", &CellSummary::heat);
  row("relative_change_heat_pct", &CellSummary::rel_heat);
  row("co2_kg_m2", &CellSummary::co2);
  row("relative_change_co2_pct", &CellSummary::rel_co2);
}

StudyTable run_study(const StudySpec& spec, std::shared_ptr<const env::WeatherSeries> weather,
                     std::shared_ptr<const oracle::OptimalClimateTable> table, int jobs,
                     const std::filesystem::path& output_root) {
  struct Job {
    const StudyCell* cell;
    std::uint64_t seed;
  };
  std::vector<Job> work;
  for (const auto& c : spec.cells) {
    for (std::uint64_t s : spec.seeds) work.push_back({&c, s});
  }
  if (!table) {
    table = std::make_shared<const oracle::OptimalClimateTable>(
        oracle::build_optimal_table(climate::ModelParams{}, oracle::GridSpec{}));
  }
  std::vector<RunResult> results(work.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      const Job& job = work[i];
      RunResult& r = results[i];
      r.label = job.cell->label;
      r.seed = job.seed;
      TrainConfig cfg = job.cell->config;
      cfg.seed = job.seed;
      cfg.evaluate_after = true;
      cfg.output_dir = output_root.empty()
                           ? std::string()
                           : (output_root / r.label / ("seed_" + std::to_string(job.seed))).string();
      try {
        Trainer t(cfg, weather, table);
        t.run();
        r.aggregate = t.final_report()->aggregate;
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      std::lock_guard lock(log_mutex);
      if (r.ok) {
        std::fprintf(stderr, "study: %s seed %llu reward %s\n", r.label.c_str(),
                     static_cast<unsigned long long>(r.seed), num(r.aggregate.cumulative_reward).c_str());
      } else {
        std::fprintf(stderr, "warning: study: %s seed %llu failed: %s\n", r.label.c_str(),
                     static_cast<unsigned long long>(r.seed), r.error.c_str());
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(work.size())));
  std::vector<std::thread> threads;
  for (int t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  StudyTable out = summarize(spec, std::move(results));
  if (!output_root.empty()) {
    std::filesystem::create_directories(output_root);
    std::ofstream runs(output_root / "runs.csv");
    out.write_runs_csv(runs);
    std::ofstream summary(output_root / "summary.csv");
    out.write_summary_csv(summary);
    std::ofstream t(output_root / "table.csv");
    out.write_table_csv(t);
  }
  return out;
}

}  // namespace ghrl::trainer
