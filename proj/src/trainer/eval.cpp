#include "ghrl/trainer/eval.hpp"

#include <cstdio>
#include <ostream>

#include "ghrl/nn/categorical.hpp"

namespace ghrl::trainer {

PolicyFactory greedy_policy(std::shared_ptr<const ppo::ActorCritic> agent,
                            env::ObservationScaling scaling) {
  return [agent, scaling] {
    return PolicyFn([agent, scaling](const env::Observation& obs) {
      const auto x = scaling.apply(obs);
      return env::Action{nn::argmax(agent->logits(x))};
    });
  };
}

PolicyFactory random_policy(std::uint64_t seed) {
  return [seed] {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return PolicyFn([rng](const env::Observation&) {
      return env::Action{static_cast<int>(nn::uniform01(*rng) * env::kNumActions)};
    });
  };
}

PolicyFactory hold_policy() {
  return [] { return PolicyFn([](const env::Observation&) { return env::Action{env::kHoldAction}; }); };
}

EvalReport evaluate(const PolicyFactory& factory, std::shared_ptr<const env::WeatherSeries> weather,
                    const env::EnvConfig& env_config, const EvalConfig& config) {
  EvalReport report;
  const std::vector<env::TestWindow> windows =
      env::test_trajectories(*weather, config.first_year, config.last_year, config.days);
  PolicyFn policy = factory();
  env::EnvConfig cfg = env_config;
  for (const env::TestWindow& w : windows) {
    cfg.episode_steps = w.steps;
    env::GreenhouseEnv e(weather, cfg);
    env::Observation obs = e.reset(w.start, config.initial_dry_weight);
    TrajectoryMetrics m;
    m.label = w.label;
    while (!e.done()) {
      const unsigned hour = env::to_civil(e.now()).hour;
      const env::StepResult r = e.step(policy(obs));
      m.cumulative_reward += r.reward.total;
      m.violation_hours += r.info.violations.empty() ? 0.0 : 1.0;
      ++m.steps;
      obs = r.obs;
      const std::array<double, HourlyProfile::kFields> row = {
          obs[env::kTempSetpoint], obs[env::kCo2Setpoint], obs[env::kVentRate],
          obs[env::kIndoorTemp],   obs[env::kIndoorRh],    obs[env::kIndoorCo2],
          obs[env::kOutdoorTemp],  obs[env::kRadiation]};
      for (std::size_t k = 0; k < row.size(); ++k) report.hourly.mean[hour][k] += row[k];
      ++report.hourly.count[hour];
    }
    m.dry_weight = e.state().dry_weight;
    m.heat = e.total_heat_used();
    m.co2 = e.total_co2_used();
    report.trajectories.push_back(m);
  }
  for (std::size_t h = 0; h < 24; ++h) {
    if (report.hourly.count[h] == 0) continue;
    for (double& v : report.hourly.mean[h]) v /= report.hourly.count[h];
  }
  TrajectoryMetrics& agg = report.aggregate;
  agg.label = "mean";
  const double n = static_cast<double>(report.trajectories.size());
  for (const TrajectoryMetrics& m : report.trajectories) {
    agg.cumulative_reward += m.cumulative_reward / n;
    agg.dry_weight += m.dry_weight / n;
    agg.heat += m.heat / n;
    agg.co2 += m.co2 / n;
    agg.violation_hours += m.violation_hours / n;
    agg.steps += m.steps;
  }
  return report;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "trajectory,cumulative_reward_hfl_m2,dry_weight_kg_m2,heat_j_m2,co2_kg_m2,"
         "violation_hours,steps\n";
  char buf[256];
  auto row = [&](const TrajectoryMetrics& m) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", m.label.c_str(),
                  m.cumulative_reward, m.dry_weight, m.heat, m.co2, m.violation_hours, m.steps);
    out << buf;
  };
  for (const TrajectoryMetrics& m : trajectories) row(m);
  row(aggregate);
}

void EvalReport::write_hourly_csv(std::ostream& out) const {
  out << "hour";
  for (const char* n : HourlyProfile::kNames) out << ',' << n;
  out << '\n';
  char buf[64];
  for (std::size_t h = 0; h < 24; ++h) {
    out << h;
    for (double v : hourly.mean[h]) {
      std::snprintf(buf, sizeof buf, ",%.10g", v);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace ghrl::trainer
