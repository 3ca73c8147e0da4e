#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ghrl/env/environment.hpp"
#include "ghrl/ppo/ppo.hpp"

namespace ghrl::trainer {

// Action chooser for one evaluation; may keep state (an RNG) across calls.
using PolicyFn = std::function<env::Action(const env::Observation&)>;
// Builds a fresh policy so repeated evaluations see identical streams.
using PolicyFactory = std::function<PolicyFn()>;

PolicyFactory greedy_policy(std::shared_ptr<const ppo::ActorCritic> agent,
                            env::ObservationScaling scaling = {});
PolicyFactory random_policy(std::uint64_t seed);
PolicyFactory hold_policy();

struct EvalConfig {
  int first_year = 2021;
  int last_year = 2024;
  int days = 56;
  double initial_dry_weight = 0.0035;  // kg/m^2
};

struct TrajectoryMetrics {
  std::string label;
  double cumulative_reward = 0.0;  // Hfl/m^2
  double dry_weight = 0.0;         // final, kg/m^2
  double heat = 0.0;               // J/m^2
  double co2 = 0.0;                // kg/m^2
  double violation_hours = 0.0;
  int steps = 0;
};

// Hour-of-day means over every evaluated step.
struct HourlyProfile {
  static constexpr std::size_t kFields = 8;
  static constexpr std::array<const char*, kFields> kNames = {
      "temp_setpoint_c", "co2_setpoint_ppm", "vent_rate_mms", "indoor_temp_c",
      "indoor_rh_pct",   "indoor_co2_ppm",   "outdoor_temp_c", "radiation_wm2"};
  std::array<std::array<double, kFields>, 24> mean{};
  std::array<int, 24> count{};
};

struct EvalReport {
  std::vector<TrajectoryMetrics> trajectories;
  TrajectoryMetrics aggregate;  // mean over trajectories
  HourlyProfile hourly;

  void write_csv(std::ostream& out) const;
  void write_hourly_csv(std::ostream& out) const;
};

// Runs every test window to the end with the policy; no shaping, no learning.
EvalReport evaluate(const PolicyFactory& policy, std::shared_ptr<const env::WeatherSeries> weather,
                    const env::EnvConfig& env_config = {}, const EvalConfig& config = {});

}  // namespace ghrl::trainer
