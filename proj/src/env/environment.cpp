#include "ghrl/env/environment.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "ghrl/errors.hpp"

namespace ghrl::env {

std::array<double, kObsSize> ObservationScaling::apply(const Observation& obs) const {
  std::array<double, kObsSize> out{};
  for (std::size_t i = 0; i < kObsSize; ++i) out[i] = (obs[i] - center[i]) / scale[i];
  return out;
}

SetpointState apply_action(const SetpointState& sp, Action a, const SetpointBounds& bounds,
                           double vent_max) {
  return {std::clamp(sp.temp + a.temp_delta(), bounds.temp_min, bounds.temp_max),
          std::clamp(sp.vent + a.vent_delta(), 0.0, vent_max),
          std::clamp(sp.co2 + a.co2_delta(), bounds.co2_min, bounds.co2_max)};
}

const char* to_string(Violation v) {
  switch (v) {
    case Violation::kTemperature: return "temperature";
    case Violation::kCo2: return "co2";
    case Violation::kHumidity: return "humidity";
  }
  return "?";
}

std::vector<Violation> check_constraints(const climate::Measurements& m,
                                         const ClimateConstraints& c) {
  std::vector<Violation> out;
  if (m.temperature < c.temp_min || m.temperature > c.temp_max) out.push_back(Violation::kTemperature);
  if (m.co2 < c.co2_min || m.co2 > c.co2_max) out.push_back(Violation::kCo2);
  if (m.humidity < c.rh_min || m.humidity > c.rh_max) out.push_back(Violation::kHumidity);
  return out;
}

RewardBreakdown reward(double dry_weight_gain, double co2_used_kg, double heat_used_j,
                       bool violated, const PriceConfig& prices) {
  RewardBreakdown r;
  r.revenue = prices.lettuce * dry_weight_gain;
  r.co2_cost = prices.co2 * co2_used_kg;
  r.heat_cost = prices.heat * heat_used_j;
  r.penalty = violated ? prices.penalty : 0.0;
  r.total = r.revenue - r.co2_cost - r.heat_cost - r.penalty;
  return r;
}

GreenhouseEnv::GreenhouseEnv(std::shared_ptr<const WeatherSeries> weather, EnvConfig config)
    : weather_(std::move(weather)), config_(std::move(config)) {
  if (!weather_) throw UsageError("GreenhouseEnv requires weather");
}

climate::Exogenous GreenhouseEnv::exogenous_at(Hour h) const {
  const WeatherRecord& w = weather_->at(h);
  climate::Exogenous d;
  d.radiation = w.radiation;
  d.temperature = w.temperature;
  d.co2 = climate::ppm_to_density(w.temperature, config_.outdoor_co2_ppm, config_.params);
  d.humidity = climate::rh_to_abs_humidity(w.temperature, w.rh, config_.params);
  return d;
}

climate::Measurements GreenhouseEnv::measurements() const {
  return climate::measure(state_, config_.params);
}

Observation GreenhouseEnv::reset(Hour start, double initial_dry_weight) {
  if (!(initial_dry_weight > 0.0)) throw UsageError("initial dry weight must be positive");
  if (!weather_->covers(start, start + config_.episode_steps)) {
    throw WeatherGapError("weather does not cover episode " + format_hour(start) + " + " +
                          std::to_string(config_.episode_steps) + " h");
  }
  start_ = start;
  steps_ = 0;
  started_ = true;
  total_co2_ = 0.0;
  total_heat_ = 0.0;
  co2_loop_.reset();
  heat_loop_.reset();

  const WeatherRecord& w = weather_->at(start);
  const double indoor_temp = std::max(w.temperature, config_.initial_temp_floor);
  state_.dry_weight = initial_dry_weight;
  state_.temperature = indoor_temp;
  state_.co2 = climate::ppm_to_density(indoor_temp, config_.outdoor_co2_ppm, config_.params);
  state_.humidity = climate::rh_to_abs_humidity(indoor_temp, config_.initial_rh, config_.params);

  const SetpointBounds& b = config_.setpoints;
  setpoints_.temp = std::clamp(w.temperature, b.temp_min, b.temp_max);
  setpoints_.vent = 0.0;
  setpoints_.co2 = std::clamp(config_.outdoor_co2_ppm, b.co2_min, b.co2_max);

  obs_ = make_observation();
  return obs_;
}

StepResult GreenhouseEnv::step(Action a) {
  if (!started_) throw UsageError("step() before reset()");
  if (done()) throw UsageError("step() after the episode finished");
  if (!a.valid()) throw UsageError("action index out of range");

  setpoints_ = apply_action(setpoints_, a, config_.setpoints, config_.limits.vent_max);
  const climate::Exogenous d = exogenous_at(now());
  const double weight_before = state_.dry_weight;

  StepResult result;
  for (int k = 0; k < kSubsteps; ++k) {
    const climate::Measurements m = measurements();
    climate::Controls u;
    u.co2_injection = climate::pi_co2(setpoints_.co2, m.co2, co2_loop_, config_.params, config_.limits);
    u.heating = climate::pi_heat(setpoints_.temp, m.temperature, heat_loop_, config_.params, config_.limits);
    u.ventilation = setpoints_.vent;
    state_ = climate::rk4_step(state_, u, d, kSubstepSeconds, config_.params);
    result.info.co2_used += u.co2_injection * kSubstepSeconds * 1e-6;
    result.info.heat_used += u.heating * kSubstepSeconds;
  }
  ++steps_;
  total_co2_ += result.info.co2_used;
  total_heat_ += result.info.heat_used;

  result.info.dry_weight_gain = state_.dry_weight - weight_before;
  result.info.violations = check_constraints(measurements(), config_.constraints);
  result.reward = reward(result.info.dry_weight_gain, result.info.co2_used, result.info.heat_used,
                         !result.info.violations.empty(), config_.prices);
  obs_ = make_observation();
  result.obs = obs_;
  result.done = done();
  return result;
}

Observation GreenhouseEnv::make_observation() const {
  const Hour t = now();
  const WeatherRecord& w = weather_->at(t);
  const climate::Measurements m = measurements();
  Observation o;
  o[kOutdoorTemp] = w.temperature;
  o[kOutdoorRh] = w.rh;
  o[kOutdoorCo2] = config_.outdoor_co2_ppm;
  o[kIndoorTemp] = m.temperature;
  o[kIndoorRh] = m.humidity;
  o[kIndoorCo2] = m.co2;
  o[kTempSetpoint] = setpoints_.temp;
  o[kVentRate] = setpoints_.vent;
  o[kCo2Setpoint] = setpoints_.co2;
  o[kHourOfDay] = static_cast<double>(to_civil(t).hour);
  o[kRadiation] = w.radiation;
  o[kDryWeight] = state_.dry_weight;
  return o;
}

EpisodeSampler::EpisodeSampler(const WeatherSeries& weather, TrainingWindow window,
                               int episode_steps)
    : window_(std::move(window)) {
  if (!(window_.min_dry_weight > 0.0) || window_.max_dry_weight < window_.min_dry_weight) {
    throw ConfigError("training window: invalid initial dry weight range");
  }
  const Hour first = std::max(weather.start(), to_hour(window_.first_year, 1, 1));
  const Hour last = std::min(weather.end(), to_hour(window_.last_year + 1, 1, 1));
  for (Hour day = (first + 23) / 24 * 24; day < last; day += 24) {
    const CivilTime c = to_civil(day);
    if (std::find(window_.months.begin(), window_.months.end(), c.month) == window_.months.end()) {
      continue;
    }
    if (weather.covers(day, day + episode_steps)) candidates_.push_back(day);
  }
  if (candidates_.empty()) {
    throw WeatherGapError("no training episode start covered by the weather in " +
                          std::to_string(window_.first_year) + "-" +
                          std::to_string(window_.last_year));
  }
}

EpisodeStart EpisodeSampler::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, candidates_.size() - 1);
  std::uniform_real_distribution<double> weight(window_.min_dry_weight, window_.max_dry_weight);
  const Hour start = candidates_[pick(rng)];
  return {start, weight(rng)};
}

std::vector<TestWindow> test_trajectories(const WeatherSeries& weather, int first_year,
                                          int last_year, int days) {
  const int steps = days * 24;
  std::vector<TestWindow> windows;
  auto add = [&](const std::string& label, Hour start, bool required) {
    if (weather.covers(start, start + steps)) {
      windows.push_back({label, start, steps});
    } else if (required) {
      throw WeatherGapError("test window " + label + " not covered by the weather");
    }
  };
  for (int y = first_year; y <= last_year; ++y) {
    add(std::to_string(y) + "-jan", to_hour(y, 1, 1), true);
  }
  for (int y = first_year; y <= last_year; ++y) {
    add(std::to_string(y) + "-dec", to_hour(y, 12, 1), y < last_year);
  }
  return windows;
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out) : out_(out) {
  out_ << "step,timestamp";
  for (const char* name : kObsNames) out_ << ',' << name;
  out_ << ",action,d_temp,d_vent,d_co2,revenue,co2_cost,heat_cost,penalty,total,"
          "co2_used_kgm2,heat_used_jm2,dry_weight_gain_kgm2,violations\n";
}

void TrajectoryWriter::write(int step, Hour time, Action a, const StepResult& r) {
  char buf[64];
  out_ << step << ',' << format_hour(time);
  for (double v : r.obs.values) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out_ << buf;
  }
  const ActionDeltas d = a.decode();
  out_ << ',' << a.index << ',' << d.temp << ',' << d.vent << ',' << d.co2;
  for (double v : {r.reward.revenue, r.reward.co2_cost, r.reward.heat_cost, r.reward.penalty,
                   r.reward.total, r.info.co2_used, r.info.heat_used, r.info.dry_weight_gain}) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out_ << buf;
  }
  out_ << ',';
  for (std::size_t i = 0; i < r.info.violations.size(); ++i) {
    if (i) out_ << '|';
    out_ << to_string(r.info.violations[i]);
  }
  out_ << '\n';
}

}  // namespace ghrl::env
