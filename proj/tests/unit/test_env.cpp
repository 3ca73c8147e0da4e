#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ghrl/env/action.hpp"
#include "ghrl/env/environment.hpp"
#include "ghrl/env/weather.hpp"
#include "ghrl/errors.hpp"

using namespace ghrl::env;

namespace {

std::shared_ptr<const WeatherSeries> constant_weather(Hour start, int hours, WeatherRecord r) {
  return std::make_shared<const WeatherSeries>(start, std::vector<WeatherRecord>(hours, r));
}

std::shared_ptr<const WeatherSeries> winter(Hour first, Hour last) {
  return std::make_shared<const WeatherSeries>(synthesize_weather(first, last, 11));
}

}  // namespace

TEST(Action, EncodeDecodeAllTriples) {
  std::set<int> seen;
  for (int t = -1; t <= 1; ++t) {
    for (int v = -1; v <= 1; ++v) {
      for (int c = -1; c <= 1; ++c) {
        const Action a = Action::encode({t, v, c});
        EXPECT_EQ(a.index, 9 * (t + 1) + 3 * (v + 1) + (c + 1));
        EXPECT_EQ(a.decode(), (ActionDeltas{t, v, c}));
        seen.insert(a.index);
      }
    }
  }
  EXPECT_EQ(seen.size(), kNumActions);
  EXPECT_EQ(Action::encode({0, 0, 0}).index, kHoldAction);
  EXPECT_EQ(Action{0}.temp_delta(), -2.0);
  EXPECT_EQ(Action{0}.vent_delta(), -0.5);
  EXPECT_EQ(Action{26}.co2_delta(), 200.0);
}

TEST(Weather, ParsesSmallFile) {
  std::istringstream in(
      "\xEF\xBB\xBF# comment\n"
      "timestamp,radiation_wm2,temp_c,rh_pct\r\n"
      "2021-01-01T00:00:00,0,3.5,88\n"
      "2021-01-01T01:00,0,3.25,89\n"
      "2021-01-01 02:00:00Z,12.5,3.0,90\n");
  const WeatherSeries w = parse_weather(in);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w.start(), to_hour(2021, 1, 1, 0));
  EXPECT_EQ(w.at(to_hour(2021, 1, 1, 2)).radiation, 12.5);
  EXPECT_EQ(w.at(to_hour(2021, 1, 1, 1)).temperature, 3.25);
  EXPECT_THROW(w.at(to_hour(2021, 1, 1, 3)), ghrl::WeatherGapError);
}

TEST(Weather, NonMonotoneIsGapError) {
  std::istringstream in(
      "timestamp,radiation_wm2,temp_c,rh_pct\n"
      "2021-01-01T01:00:00,0,3,88\n"
      "2021-01-01T00:00:00,0,3,88\n");
  EXPECT_THROW(parse_weather(in), ghrl::WeatherGapError);
}

TEST(Weather, MissingHourIsGapError) {
  std::istringstream in(
      "timestamp,radiation_wm2,temp_c,rh_pct\n"
      "2021-01-01T00:00:00,0,3,88\n"
      "2021-01-01T02:00:00,0,3,88\n");
  EXPECT_THROW(parse_weather(in), ghrl::WeatherGapError);
}

TEST(Weather, FormatErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_weather(in);
    } catch (const ghrl::WeatherFormatError& e) {
      return e.line();
    }
    return 0;
  };
  const std::string header = "timestamp,radiation_wm2,temp_c,rh_pct\n";
  EXPECT_EQ(line_of("time,rad,t,rh\n"), 1u);
  EXPECT_EQ(line_of(header + "2021-01-01T00:00:00,0,3,88\n2021-01-01T01:00:00,x,3,88\n"), 3u);
  EXPECT_EQ(line_of(header + "2021-01-01T00:30:00,0,3,88\n"), 2u);
  EXPECT_EQ(line_of(header + "2021-01-01T00:00:00,-1,3,88\n"), 2u);
  EXPECT_EQ(line_of(header + "2021-01-01T00:00:00,0,3\n"), 2u);
  EXPECT_EQ(line_of(header), 1u);
}

TEST(Weather, JoulePerCm2Conversion) {
  std::istringstream in(
      "timestamp,radiation_wm2,temp_c,rh_pct\n"
      "2021-06-01T12:00:00,36,15,60\n");
  const WeatherSeries w = parse_weather(in, RadiationUnits::kJoulePerCm2PerHour);
  EXPECT_DOUBLE_EQ(w.records()[0].radiation, 100.0);
}

TEST(Weather, SynthesisRoundTripsThroughCsv) {
  const WeatherSeries w = synthesize_weather(to_hour(2021, 12, 1), to_hour(2022, 3, 1), 3);
  EXPECT_EQ(w.size(), 90u * 24u);
  std::stringstream ss;
  write_weather(ss, w);
  const WeatherSeries back = parse_weather(ss);
  ASSERT_EQ(back.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(back.records()[i].radiation, w.records()[i].radiation);
    EXPECT_EQ(back.records()[i].temperature, w.records()[i].temperature);
    EXPECT_EQ(back.records()[i].rh, w.records()[i].rh);
  }
}

TEST(Weather, BundledFixtureLoads) {
  const WeatherSeries w = load_weather(GHRL_TEST_DATA "/winter_fixture_90d.csv");
  EXPECT_EQ(w.size(), 90u * 24u);
  bool day = false;
  bool night = false;
  for (const WeatherRecord& r : w.records()) {
    EXPECT_GE(r.radiation, 0.0);
    EXPECT_GE(r.rh, 0.0);
    day |= r.radiation > 5.0;
    night |= r.radiation == 0.0;
  }
  EXPECT_TRUE(day && night);
}

TEST(Constraints, Examples) {
  EXPECT_TRUE(check_constraints({0, 800, 20, 70}).empty());
  const auto hum = check_constraints({0, 800, 20, 95});
  ASSERT_EQ(hum.size(), 1u);
  EXPECT_EQ(hum[0], Violation::kHumidity);
  EXPECT_EQ(check_constraints({0, 1600, 5, 95}).size(), 3u);
  EXPECT_TRUE(check_constraints({0, 1500, 6.5, 90}).empty());
}

TEST(Reward, Examples) {
  EXPECT_DOUBLE_EQ(reward(1e-4, 0, 0, false).total, 1.6e-3);
  EXPECT_EQ(reward(0, 0, 0, true).total, -5.24e-3);
  const RewardBreakdown r = reward(1e-4, 1e-3, 1e5, false);
  EXPECT_NEAR(r.total, 5.45e-4, 1e-18);
  EXPECT_EQ(r.total, r.revenue - r.co2_cost - r.heat_cost - r.penalty);
}

TEST(Scaling, MatchesGoldenFile) {
  std::ifstream in(GHRL_TEST_DATA "/obs_scaling.golden");
  const ObservationScaling s;
  for (std::size_t i = 0; i < kObsSize; ++i) {
    std::string name;
    double center = 0.0;
    double scale = 0.0;
    ASSERT_TRUE(in >> name >> center >> scale);
    EXPECT_EQ(name, kObsNames[i]);
    EXPECT_EQ(s.center[i], center) << name;
    EXPECT_EQ(s.scale[i], scale) << name;
  }
}

TEST(Env, ResetPassesDryWeightAndIsDeterministic) {
  const Hour start = to_hour(2021, 1, 1);
  GreenhouseEnv env(winter(start, start + 400));
  const Observation a = env.reset(start, 0.0035);
  EXPECT_EQ(a[kDryWeight], 0.0035);
  EXPECT_EQ(a[kCo2Setpoint], 400.0);
  EXPECT_EQ(a[kVentRate], 0.0);
  EXPECT_NEAR(a[kIndoorCo2], 400.0, 1e-9);
  EXPECT_NEAR(a[kIndoorRh], 80.0, 1e-9);
  EXPECT_GE(a[kIndoorTemp], 6.5);
  env.step(Action{5});
  const Observation b = env.reset(start, 0.0035);
  EXPECT_EQ(a, b);
  EXPECT_EQ(env.steps(), 0);
}

TEST(Env, ResetRequiresCoverage) {
  const Hour start = to_hour(2021, 1, 1);
  GreenhouseEnv env(winter(start, start + 100));
  EXPECT_THROW(env.reset(start, 0.01), ghrl::WeatherGapError);
}

TEST(Env, HoldKeepsSetpointsAndUpperBoundClamps) {
  const Hour start = to_hour(2021, 1, 1);
  GreenhouseEnv env(constant_weather(start, 400, {0.0, 29.5, 80.0}));
  env.reset(start, 0.05);
  const SetpointState before = env.setpoints();
  env.step(Action{kHoldAction});
  EXPECT_EQ(env.setpoints(), before);
  env.step(Action::encode({1, 1, 1}));
  EXPECT_EQ(env.setpoints().temp, 30.0);
  env.step(Action::encode({1, 0, 0}));
  EXPECT_EQ(env.setpoints().temp, 30.0);
}

TEST(Env, SaturatedHeatingHourCost) {
  const Hour start = to_hour(2021, 1, 1);
  GreenhouseEnv env(constant_weather(start, 400, {0.0, -10.0, 85.0}));
  env.reset(start, 0.05);
  StepResult r;
  for (int i = 0; i < 14; ++i) r = env.step(Action::encode({1, 0, 0}));
  EXPECT_EQ(env.setpoints().temp, 30.0);
  EXPECT_EQ(r.info.heat_used, 150.0 * 3600.0);
  EXPECT_NEAR(r.reward.heat_cost, 3.429e-3, 1e-15);
}

TEST(Env, EpisodeInvariants) {
  const Hour start = to_hour(2021, 1, 1);
  GreenhouseEnv env(winter(start, start + 400));
  env.reset(start, 0.02);
  std::mt19937_64 rng(5);
  double co2 = 0.0;
  double heat = 0.0;
  int steps = 0;
  const SetpointBounds b;
  while (!env.done()) {
    // action closure: every action from here stays in bounds
    for (int a = 0; a < 27; ++a) {
      const SetpointState next = apply_action(env.setpoints(), Action{a}, b, 7.5);
      EXPECT_TRUE(next.temp >= 6 && next.temp <= 30 && next.co2 >= 200 && next.co2 <= 1600 &&
                  next.vent >= 0 && next.vent <= 7.5);
    }
    const StepResult r = env.step(Action{static_cast<int>(rng() % 27)});
    ++steps;
    EXPECT_EQ(r.reward.total,
              r.reward.revenue - r.reward.co2_cost - r.reward.heat_cost - r.reward.penalty);
    EXPECT_GE(env.total_co2_used(), co2);
    EXPECT_GE(env.total_heat_used(), heat);
    co2 = env.total_co2_used();
    heat = env.total_heat_used();
    EXPECT_EQ(r.done, steps == kTrainEpisodeSteps);
  }
  EXPECT_EQ(steps, kTrainEpisodeSteps);
  EXPECT_THROW(env.step(Action{13}), ghrl::UsageError);
}

TEST(Env, StepBeforeResetIsUsageError) {
  GreenhouseEnv env(winter(0, 10));
  EXPECT_THROW(env.step(Action{13}), ghrl::UsageError);
}

TEST(Env, IdenticalRunsAreBitIdentical) {
  const Hour start = to_hour(2021, 1, 1);
  auto w = winter(start, start + 400);
  auto run = [&] {
    GreenhouseEnv env(w);
    env.reset(start, 0.01);
    std::mt19937_64 rng(9);
    std::vector<double> trace;
    while (!env.done()) {
      const StepResult r = env.step(Action{static_cast<int>(rng() % 27)});
      trace.insert(trace.end(), r.obs.values.begin(), r.obs.values.end());
      trace.push_back(r.reward.total);
    }
    return trace;
  };
  EXPECT_EQ(run(), run());
}

TEST(Env, CloneContinuesIdentically) {
  const Hour start = to_hour(2021, 1, 1);
  GreenhouseEnv env(winter(start, start + 400));
  env.reset(start, 0.01);
  for (int i = 0; i < 30; ++i) env.step(Action{(i * 7) % 27});
  GreenhouseEnv clone = env;
  for (int i = 0; i < 30; ++i) {
    const StepResult a = env.step(Action{(i * 5) % 27});
    const StepResult b = clone.step(Action{(i * 5) % 27});
    EXPECT_EQ(a.obs, b.obs);
    EXPECT_EQ(a.reward.total, b.reward.total);
  }
}

TEST(Sampler, DrawsInsideTrainingWindow) {
  auto w = winter(to_hour(2010, 10, 1), to_hour(2021, 4, 1));
  EpisodeSampler sampler(*w, {}, kTrainEpisodeSteps);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const EpisodeStart s = sampler.sample(rng);
    const CivilTime c = to_civil(s.start);
    EXPECT_TRUE(c.month == 11 || c.month == 12 || c.month == 1 || c.month == 2);
    EXPECT_GE(c.year, 2011);
    EXPECT_LE(c.year, 2020);
    EXPECT_EQ(c.hour, 0u);
    EXPECT_GE(s.dry_weight, 0.0035);
    EXPECT_LE(s.dry_weight, 0.3);
    ASSERT_TRUE(w->covers(s.start, s.start + kTrainEpisodeSteps));
  }
}

TEST(Sampler, SameSeedSameStarts) {
  auto w = winter(to_hour(2011, 1, 1), to_hour(2012, 1, 1));
  EpisodeSampler sampler(*w, {}, kTrainEpisodeSteps);
  std::mt19937_64 a(4), b(4);
  for (int i = 0; i < 100; ++i) {
    const EpisodeStart x = sampler.sample(a);
    const EpisodeStart y = sampler.sample(b);
    EXPECT_EQ(x.start, y.start);
    EXPECT_EQ(x.dry_weight, y.dry_weight);
  }
}

TEST(TestWindows, SevenWindowsWhenDataEndsWith2024) {
  auto w = winter(to_hour(2021, 1, 1), to_hour(2025, 1, 1));
  const auto windows = test_trajectories(*w);
  ASSERT_EQ(windows.size(), 7u);
  for (const TestWindow& t : windows) EXPECT_EQ(t.steps, 1344);
  EXPECT_EQ(windows.front().label, "2021-jan");
  EXPECT_EQ(windows.back().label, "2023-dec");
  EXPECT_EQ(windows.back().start, to_hour(2023, 12, 1));
}

TEST(TestWindows, EighthWindowWhenCovered) {
  auto w = winter(to_hour(2021, 1, 1), to_hour(2025, 1, 27));
  EXPECT_EQ(test_trajectories(*w).size(), 8u);
}

TEST(TestWindows, MissingJanuaryIsGapError) {
  auto w = winter(to_hour(2021, 3, 1), to_hour(2025, 1, 1));
  EXPECT_THROW(test_trajectories(*w), ghrl::WeatherGapError);
}

TEST(Trajectory, WriterEmitsHeaderAndRows) {
  const Hour start = to_hour(2021, 1, 1);
  GreenhouseEnv env(winter(start, start + 400));
  env.reset(start, 0.01);
  std::ostringstream out;
  TrajectoryWriter writer(out);
  for (int i = 0; i < 3; ++i) writer.write(i, env.now(), Action{13}, env.step(Action{13}));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("step,timestamp,outdoor_temp_c,", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}
