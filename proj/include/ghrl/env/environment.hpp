#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ghrl/climate/model.hpp"
#include "ghrl/climate/params.hpp"
#include "ghrl/climate/pi.hpp"
#include "ghrl/env/action.hpp"
#include "ghrl/env/weather.hpp"

namespace ghrl::env {

// Field order of the 12-dimensional observation. Frozen: checkpoints,
// dumps and the service snapshot all rely on it.
enum ObsField : std::size_t {
  kOutdoorTemp = 0,  // degC
  kOutdoorRh,        // %
  kOutdoorCo2,       // ppm
  kIndoorTemp,       // degC
  kIndoorRh,         // %
  kIndoorCo2,        // ppm
  kTempSetpoint,     // degC
  kVentRate,         // mm/s
  kCo2Setpoint,      // ppm
  kHourOfDay,        // [0, 24)
  kRadiation,        // W/m^2
  kDryWeight,        // kg/m^2
  kObsSize
};

inline constexpr std::array<const char*, kObsSize> kObsNames = {
    "outdoor_temp_c", "outdoor_rh_pct", "outdoor_co2_ppm", "indoor_temp_c",
    "indoor_rh_pct",  "indoor_co2_ppm", "temp_setpoint_c", "vent_rate_mms",
    "co2_setpoint_ppm", "hour_of_day",  "radiation_wm2",   "dry_weight_kgm2"};

struct Observation {
  std::array<double, kObsSize> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

// Affine map (x - center) / scale applied at the network boundary only.
struct ObservationScaling {
  std::array<double, kObsSize> center{10.0, 80.0, 400.0, 15.0, 75.0, 800.0,
                                      15.0, 3.75, 900.0, 12.0, 100.0, 0.15};
  std::array<double, kObsSize> scale{15.0, 20.0, 400.0, 15.0, 25.0, 700.0,
                                     15.0, 3.75, 700.0, 12.0, 200.0, 0.15};

  std::array<double, kObsSize> apply(const Observation& obs) const;
};

struct SetpointBounds {
  double temp_min = 6.0;
  double temp_max = 30.0;
  double co2_min = 200.0;
  double co2_max = 1600.0;
};

struct SetpointState {
  double temp = 15.0;   // degC
  double vent = 0.0;    // mm/s
  double co2 = 400.0;   // ppm

  friend bool operator==(const SetpointState&, const SetpointState&) = default;
};

// Setpoints after adding an action's deltas and clamping to bounds.
SetpointState apply_action(const SetpointState& sp, Action a, const SetpointBounds& bounds,
                           double vent_max);

struct PriceConfig {
  double lettuce = 16.0;       // Hfl/kg
  double co2 = 0.42;           // Hfl/kg
  double heat = 6.35e-9;       // Hfl/J
  double penalty = 5.24e-3;    // Hfl/m^2 per violating control hour
};

struct ClimateConstraints {
  double temp_min = 6.5;
  double temp_max = 40.0;
  double co2_min = 0.0;
  double co2_max = 1500.0;
  double rh_min = 0.0;
  double rh_max = 90.0;
};

enum class Violation { kTemperature, kCo2, kHumidity };
const char* to_string(Violation v);

std::vector<Violation> check_constraints(const climate::Measurements& m,
                                         const ClimateConstraints& c = {});

struct RewardBreakdown {
  double revenue = 0.0;
  double co2_cost = 0.0;
  double heat_cost = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

// total = revenue - co2_cost - heat_cost - penalty, with a single flat
// penalty when any constraint is violated.
RewardBreakdown reward(double dry_weight_gain, double co2_used_kg, double heat_used_j,
                       bool violated, const PriceConfig& prices = {});

struct StepInfo {
  std::vector<Violation> violations;
  double co2_used = 0.0;         // kg/m^2 this hour
  double heat_used = 0.0;        // J/m^2 this hour
  double dry_weight_gain = 0.0;  // kg/m^2 this hour
};

struct StepResult {
  Observation obs;
  RewardBreakdown reward;
  bool done = false;
  StepInfo info;
};

struct EnvConfig {
  climate::ModelParams params;
  climate::ActuatorLimits limits;
  SetpointBounds setpoints;
  PriceConfig prices;
  ClimateConstraints constraints;
  int episode_steps = 336;
  double outdoor_co2_ppm = 400.0;
  double initial_rh = 80.0;
  double initial_temp_floor = 6.5;
};

inline constexpr int kSubsteps = 4;
inline constexpr double kSubstepSeconds = 900.0;
inline constexpr int kTrainEpisodeSteps = 336;
inline constexpr int kTestEpisodeSteps = 1344;

// Hourly-control lettuce greenhouse. Value type: copying yields an
// independent clone that continues identically.
class GreenhouseEnv {
 public:
  GreenhouseEnv(std::shared_ptr<const WeatherSeries> weather, EnvConfig config = {});

  // Throws WeatherGapError when the weather does not cover the episode.
  Observation reset(Hour start, double initial_dry_weight);
  StepResult step(Action a);

  bool done() const { return steps_ >= config_.episode_steps; }
  bool started() const { return started_; }
  int steps() const { return steps_; }
  Hour start() const { return start_; }
  Hour now() const { return start_ + steps_; }

  const EnvConfig& config() const { return config_; }
  EnvConfig& mutable_config() { return config_; }
  const WeatherSeries& weather() const { return *weather_; }
  const climate::ModelState& state() const { return state_; }
  const SetpointState& setpoints() const { return setpoints_; }
  climate::Measurements measurements() const;
  const Observation& observation() const { return obs_; }
  double total_co2_used() const { return total_co2_; }
  double total_heat_used() const { return total_heat_; }

  climate::Exogenous exogenous_at(Hour h) const;

 private:
  Observation make_observation() const;

  std::shared_ptr<const WeatherSeries> weather_;
  EnvConfig config_;
  climate::ModelState state_{};
  SetpointState setpoints_{};
  climate::PiLoop co2_loop_;
  climate::PiLoop heat_loop_;
  Observation obs_{};
  Hour start_ = 0;
  int steps_ = 0;
  bool started_ = false;
  double total_co2_ = 0.0;
  double total_heat_ = 0.0;
};

// Training-episode start sampler: midnight starts on days in the configured
// months and years whose episode is covered by the weather, plus a uniform
// initial dry weight.
struct TrainingWindow {
  int first_year = 2011;
  int last_year = 2020;
  std::vector<unsigned> months{11, 12, 1, 2};
  double min_dry_weight = 0.0035;
  double max_dry_weight = 0.3;
};

struct EpisodeStart {
  Hour start = 0;
  double dry_weight = 0.0;
};

class EpisodeSampler {
 public:
  EpisodeSampler(const WeatherSeries& weather, TrainingWindow window, int episode_steps);
  EpisodeStart sample(std::mt19937_64& rng) const;
  const std::vector<Hour>& candidates() const { return candidates_; }

 private:
  TrainingWindow window_;
  std::vector<Hour> candidates_;
};

struct TestWindow {
  std::string label;
  Hour start = 0;
  int steps = kTestEpisodeSteps;
};

// Jan 1 -> Feb 25 for every year and Dec 1 -> Jan 25 for every year but the
// last; the last year's December window is added only when covered.
std::vector<TestWindow> test_trajectories(const WeatherSeries& weather, int first_year = 2021,
                                          int last_year = 2024, int days = 56);

// Per-step CSV dump of an episode.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out);
  void write(int step, Hour time, Action a, const StepResult& r);

 private:
  std::ostream& out_;
};

}  // namespace ghrl::env
