// ghrl: command-line entry points.
#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "ghrl/errors.hpp"
#include "ghrl/service/server.hpp"
#include "ghrl/trainer/study.hpp"
#include "ghrl/trainer/trainer.hpp"

using namespace ghrl;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

std::string dashed(std::string s) {
  for (char& c : s) {
    if (c == '_') c = '-';
  }
  return s;
}

// Converts a flag string to the JSON type of the key's default value.
json typed_value(const std::string& key, const std::string& text, const json& defaults) {
  const json& d = defaults.at(key);
  try {
    if (d.is_boolean()) {
      if (text == "true" || text == "1" || text == "on") return true;
      if (text == "false" || text == "0" || text == "off") return false;
      throw ConfigError("");
    }
    std::size_t used = 0;
    if (d.is_number_integer()) {
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw ConfigError("");
      return v;
    }
    if (d.is_number()) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw ConfigError("");
      return v;
    }
  } catch (const std::exception&) {
    throw ConfigError("--" + key + ": cannot parse '" + text + "'");
  }
  return text;
}

// Every config key becomes a flag (underscore and dashed spellings).
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file; flags override its keys");
    const json defaults = trainer::TrainConfig{}.to_json();
    for (const std::string& key : trainer::config_keys()) {
      std::string names = "--" + key;
      if (dashed(key) != key) names += ",--" + dashed(key);
      app->add_option(names, values[key], "config key " + key + " (default " + defaults.at(key).dump() + ")");
    }
  }

  json merged(CLI::App* app) const {
    json j = json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("cannot open config file " + config_file);
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(config_file + ": " + e.what());
      }
    }
    const json defaults = trainer::TrainConfig{}.to_json();
    for (const auto& [key, text] : values) {
      if (app->count("--" + key) > 0) j[key] = typed_value(key, text, defaults);
    }
    return j;
  }

  trainer::TrainConfig config(CLI::App* app) const { return trainer::TrainConfig::from_json(merged(app)); }
};

std::shared_ptr<const oracle::OptimalClimateTable> table_for(const std::string& path) {
  const climate::ModelParams params;
  return std::make_shared<const oracle::OptimalClimateTable>(
      path.empty() ? oracle::build_optimal_table(params, oracle::GridSpec{})
                   : oracle::OptimalClimateTable::load(path, params));
}

trainer::PolicyFactory policy_for(const std::string& policy, const std::string& checkpoint, std::uint64_t seed) {
  if (policy == "hold") return trainer::hold_policy();
  if (policy == "random") return trainer::random_policy(seed);
  if (policy == "greedy") {
    if (checkpoint.empty()) throw ConfigError("--policy greedy needs --checkpoint");
    return trainer::greedy_policy(std::make_shared<const ppo::ActorCritic>(trainer::load_agent(checkpoint)));
  }
  throw ConfigError("unknown policy '" + policy + "' (hold, random, greedy)");
}

env::Hour parse_date(const std::string& text) {
  env::Hour h = 0;
  if (env::parse_hour(text, h) || env::parse_hour(text + "T00:00:00", h)) return h;
  throw ConfigError("bad date '" + text + "' (YYYY-MM-DD or YYYY-MM-DDTHH:00:00)");
}

void print_row(const char* label, double v) { std::printf("  %-26s %.6g\n", label, v); }

int run_train(CLI::App* app, const ConfigFlags& flags) {
  const trainer::TrainConfig cfg = flags.config(app);
  const auto weather = trainer::load_weather_spec(cfg.weather);
  trainer::Trainer t(cfg, weather);
  t.hooks.on_interval = [&](const trainer::IntervalMetrics& m, const trainer::AuxMetrics* a) {
    std::fprintf(stderr, "update %llu  step %llu  beta %.4f  reward %.5f  shaped %.5f  queries %zu",
                 static_cast<unsigned long long>(m.update), static_cast<unsigned long long>(m.steps), m.beta,
                 m.reward_raw, m.reward_shaped, m.queries);
    if (a) std::fprintf(stderr, "  error-loss %.5f", a->train.error);
    std::fprintf(stderr, "\n");
  };
  t.run();
  if (t.final_report()) {
    const auto& agg = t.final_report()->aggregate;
    std::printf("test (mean over %zu windows)\n", t.final_report()->trajectories.size());
    print_row("cumulative_reward_hfl_m2", agg.cumulative_reward);
    print_row("dry_weight_kg_m2", agg.dry_weight);
    print_row("heat_j_m2", agg.heat);
    print_row("co2_kg_m2", agg.co2);
  }
  if (!cfg.output_dir.empty()) std::printf("run directory: %s\n", cfg.output_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grower-in-the-loop RL workbench for greenhouse climate control"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  // oracle-build
  auto* ob = app.add_subcommand("oracle-build", "Precompute the optimal-climate table");
  std::string ob_out;
  oracle::GridSpec grid;
  bool ob_reference = false;
  ob->add_option("--out", ob_out, "Output file")->required();
  ob->add_option("--radiation-max", grid.radiation.max, "W/m^2");
  ob->add_option("--radiation-nodes", grid.radiation.nodes);
  ob->add_option("--dry-weight-min", grid.dry_weight.min, "kg/m^2");
  ob->add_option("--dry-weight-max", grid.dry_weight.max, "kg/m^2");
  ob->add_option("--dry-weight-nodes", grid.dry_weight.nodes);
  ob->add_option("--temp-step", grid.temp_step, "degC");
  ob->add_option("--co2-step", grid.co2_step, "ppm");
  ob->add_flag("--reference", ob_reference, "Use the serial reference builder");

  // env-sim
  auto* es = app.add_subcommand("env-sim", "Dump one episode under a scripted policy");
  std::string es_policy = "hold", es_checkpoint, es_weather = "synthetic:2024", es_start = "2021-01-01", es_out;
  int es_steps = env::kTestEpisodeSteps;
  double es_dw = 0.0035;
  std::uint64_t es_seed = 1;
  es->add_option("--policy", es_policy, "hold | random | greedy")->capture_default_str();
  es->add_option("--checkpoint", es_checkpoint, "Agent for --policy greedy");
  es->add_option("--weather", es_weather, "CSV path or synthetic:SEED")->capture_default_str();
  es->add_option("--start", es_start, "Episode start")->capture_default_str();
  es->add_option("--steps", es_steps)->capture_default_str();
  es->add_option("--dry-weight", es_dw, "Initial dry weight kg/m^2")->capture_default_str();
  es->add_option("--seed", es_seed, "Seed of --policy random")->capture_default_str();
  es->add_option("--out", es_out, "CSV file (stdout when omitted)");

  // train
  auto* tr = app.add_subcommand("train", "Train one configuration");
  ConfigFlags train_flags;
  train_flags.add_to(tr);

  // config-dump
  auto* cd = app.add_subcommand("config-dump", "Print the full config (defaults plus flags) as JSON");
  ConfigFlags dump_flags;
  dump_flags.add_to(cd);

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint or scripted policy on the test windows");
  std::string ev_checkpoint, ev_policy, ev_weather, ev_out;
  int ev_first = 2021, ev_last = 2024;
  std::uint64_t ev_seed = 1;
  ev->add_option("--checkpoint", ev_checkpoint, "Agent checkpoint (greedy policy)");
  ev->add_option("--policy", ev_policy, "hold | random | greedy (default greedy with --checkpoint)");
  ev->add_option("--weather", ev_weather, "Default: the checkpoint's weather, else synthetic:2024");
  ev->add_option("--first-year", ev_first)->capture_default_str();
  ev->add_option("--last-year", ev_last)->capture_default_str();
  ev->add_option("--seed", ev_seed, "Seed of --policy random")->capture_default_str();
  ev->add_option("--out", ev_out, "Directory for report.csv and hourly.csv (stdout when omitted)");

  // study
  auto* st = app.add_subcommand("study", "Run a mechanism x seed matrix and tabulate against baseline");
  std::string st_file, st_out, st_weather, st_table;
  std::vector<std::uint64_t> st_seeds;
  std::uint64_t st_total = 0;
  int st_jobs = 1;
  st->add_option("--study", st_file, "Study JSON (default: the six-cell comparison matrix)");
  st->add_option("--seeds", st_seeds, "Override the seed list")->delimiter(',');
  st->add_option("--total-steps,--total_steps", st_total, "Override total_steps for every cell");
  st->add_option("--weather", st_weather, "Override weather for every cell");
  st->add_option("--oracle-table,--oracle_table", st_table, "Precomputed optimal-climate table");
  st->add_option("--jobs", st_jobs, "Parallel runs")->capture_default_str();
  st->add_option("--out", st_out, "Output root")->required();

  // serve
  auto* sv = app.add_subcommand("serve", "Run the session service");
  service::ServerOptions sv_opt;
  std::string sv_runs = "runs";
  sv->add_option("--host", sv_opt.host)->capture_default_str();
  sv->add_option("--port", sv_opt.port)->capture_default_str();
  sv->add_option("--runs-dir", sv_runs, "Parent of session run directories")->capture_default_str();
  sv->add_option("--climate-every", sv_opt.climate_every, "Steps between climate events")->capture_default_str();

  // weather-validate
  auto* wv = app.add_subcommand("weather-validate", "Check a weather CSV");
  std::string wv_file, wv_units = "wm2";
  int wv_first = 2021, wv_last = 2024;
  wv->add_option("file", wv_file)->required();
  wv->add_option("--units", wv_units, "Radiation units: wm2 | jcm2")->capture_default_str();
  wv->add_option("--test-first-year", wv_first)->capture_default_str();
  wv->add_option("--test-last-year", wv_last)->capture_default_str();

  // weather-synth
  auto* ws = app.add_subcommand("weather-synth", "Write the deterministic synthetic weather series");
  std::string ws_from = "2011-01-01", ws_to = "2025-01-01", ws_out;
  std::uint64_t ws_seed = 2024;
  ws->add_option("--from", ws_from)->capture_default_str();
  ws->add_option("--to", ws_to, "Exclusive")->capture_default_str();
  ws->add_option("--seed", ws_seed)->capture_default_str();
  ws->add_option("--out", ws_out, "CSV file (stdout when omitted)");

  // params-dump
  auto* pd = app.add_subcommand("params-dump", "Print the model parameter table and its hash");

  // heldout-build
  auto* hb = app.add_subcommand("heldout-build", "Label rollouts of checkpoints with the simulated grower");
  std::vector<std::string> hb_checkpoints;
  bool hb_random = false;
  std::string hb_mechanism = "policy_shaping_precise", hb_weather = "synthetic:2024", hb_table, hb_out;
  int hb_stride = 7, hb_first = 2021, hb_last = 2024;
  hb->add_option("--checkpoint", hb_checkpoints, "Agent checkpoints (repeatable)");
  hb->add_flag("--random", hb_random, "Add a uniform-random policy");
  hb->add_option("--mechanism", hb_mechanism, "Decides the input kind")->capture_default_str();
  hb->add_option("--stride", hb_stride, "Keep every n-th step")->capture_default_str();
  hb->add_option("--weather", hb_weather)->capture_default_str();
  hb->add_option("--oracle-table", hb_table);
  hb->add_option("--first-year", hb_first)->capture_default_str();
  hb->add_option("--last-year", hb_last)->capture_default_str();
  hb->add_option("--out", hb_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (ob->parsed()) {
      grid.validate();
      const climate::ModelParams params;
      const auto t0 = std::chrono::steady_clock::now();
      const auto table = ob_reference ? oracle::reference::build_optimal_table(params, grid)
                                      : oracle::build_optimal_table(params, grid);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      table.save(ob_out);
      std::printf("wrote %s (%zu x %zu nodes, %.2f s)\n", ob_out.c_str(), grid.radiation.nodes,
                  grid.dry_weight.nodes, secs);
    } else if (es->parsed()) {
      const auto weather = trainer::load_weather_spec(es_weather);
      env::EnvConfig ec;
      ec.episode_steps = es_steps;
      env::GreenhouseEnv e(weather, ec);
      env::Observation obs = e.reset(parse_date(es_start), es_dw);
      const trainer::PolicyFn policy = policy_for(es_policy, es_checkpoint, es_seed)();
      std::ofstream file;
      if (!es_out.empty()) {
        file.open(es_out);
        if (!file) throw DataError("cannot write " + es_out);
      }
      env::TrajectoryWriter writer(es_out.empty() ? std::cout : file);
      for (int step = 0; !e.done(); ++step) {
        const env::Hour t = e.now();
        const env::Action a = policy(obs);
        const env::StepResult r = e.step(a);
        writer.write(step, t, a, r);
        obs = r.obs;
      }
    } else if (tr->parsed()) {
      return run_train(tr, train_flags);
    } else if (cd->parsed()) {
      std::cout << dump_flags.config(cd).to_json().dump(2) << '\n';
    } else if (ev->parsed()) {
      std::string policy = ev_policy.empty() ? (ev_checkpoint.empty() ? "" : "greedy") : ev_policy;
      if (policy.empty()) throw ConfigError("eval needs --checkpoint or --policy");
      std::string weather_spec = ev_weather;
      if (weather_spec.empty()) {
        weather_spec = ev_checkpoint.empty() ? "synthetic:2024" : trainer::load_checkpoint_config(ev_checkpoint).weather;
      }
      trainer::EvalConfig ec;
      ec.first_year = ev_first;
      ec.last_year = ev_last;
      const auto report = trainer::evaluate(policy_for(policy, ev_checkpoint, ev_seed),
                                            trainer::load_weather_spec(weather_spec), {}, ec);
      if (ev_out.empty()) {
        report.write_csv(std::cout);
      } else {
        std::filesystem::create_directories(ev_out);
        std::ofstream out(std::filesystem::path(ev_out) / "report.csv");
        report.write_csv(out);
        std::ofstream hourly(std::filesystem::path(ev_out) / "hourly.csv");
        report.write_hourly_csv(hourly);
        std::printf("mean cumulative reward %.6g Hfl/m^2 over %zu windows\n", report.aggregate.cumulative_reward,
                    report.trajectories.size());
      }
    } else if (st->parsed()) {
      json j = json::object();
      if (!st_file.empty()) {
        std::ifstream in(st_file);
        if (!in) throw ConfigError("cannot open study file " + st_file);
        try {
          j = json::parse(in);
        } catch (const json::parse_error& e) {
          throw ConfigError(st_file + ": " + e.what());
        }
      }
      if (!j.contains("base")) j["base"] = json::object();
      if (st_total > 0) j["base"]["total_steps"] = st_total;
      if (!st_weather.empty()) j["base"]["weather"] = st_weather;
      if (!st_seeds.empty()) j["seeds"] = st_seeds;
      const trainer::StudySpec spec = trainer::StudySpec::from_json(j);
      std::shared_ptr<const env::WeatherSeries> weather;
      for (const auto& c : spec.cells) {
        if (c.config.weather != spec.cells.front().config.weather) {
          throw ConfigError("all study cells must use the same weather");
        }
      }
      weather = trainer::load_weather_spec(spec.cells.front().config.weather);
      const auto table = trainer::run_study(spec, weather, table_for(st_table), st_jobs, st_out);
      table.write_table_csv(std::cout);
    } else if (sv->parsed()) {
      sv_opt.runs_dir = sv_runs;
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      service::Server server(sv_opt, service::cached_resources());
      const int port = server.bind();
      server.start_background();
      std::printf("listening on http://%s:%d\n", sv_opt.host.c_str(), port);
      std::fflush(stdout);
      int sig = 0;
      sigwait(&set, &sig);
      std::printf("shutting down\n");
      server.stop();
    } else if (wv->parsed()) {
      const auto units = wv_units == "jcm2" ? env::RadiationUnits::kJoulePerCm2PerHour
                         : wv_units == "wm2" ? env::RadiationUnits::kWattPerM2
                                             : throw ConfigError("--units must be wm2 or jcm2");
      const env::WeatherSeries w = env::load_weather(wv_file, units);
      const climate::ModelParams params;
      double rmax = 0, tmin = 1e9, tmax = -1e9;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const env::WeatherRecord& r = w.records()[i];
        try {
          climate::rh_to_abs_humidity(r.temperature, r.rh, params);
        } catch (const WeatherDomainError& e) {
          throw WeatherDomainError(env::format_hour(w.start() + static_cast<env::Hour>(i)) + ": " + e.what());
        }
        rmax = std::max(rmax, r.radiation);
        tmin = std::min(tmin, r.temperature);
        tmax = std::max(tmax, r.temperature);
      }
      std::printf("%s: %zu hourly records %s .. %s\n", wv_file.c_str(), w.size(), env::format_hour(w.start()).c_str(),
                  env::format_hour(w.end() - 1).c_str());
      std::printf("radiation max %.1f W/m^2, temperature %.1f .. %.1f degC\n", rmax, tmin, tmax);
      try {
        const auto windows = env::test_trajectories(w, wv_first, wv_last);
        std::printf("test windows %d-%d: %zu covered\n", wv_first, wv_last, windows.size());
      } catch (const WeatherGapError& e) {
        std::printf("test windows %d-%d: not covered (%s)\n", wv_first, wv_last, e.what());
      }
    } else if (ws->parsed()) {
      const env::WeatherSeries w = env::synthesize_weather(parse_date(ws_from), parse_date(ws_to), ws_seed);
      if (ws_out.empty()) {
        env::write_weather(std::cout, w);
      } else {
        std::ofstream out(ws_out);
        if (!out) throw DataError("cannot write " + ws_out);
        env::write_weather(out, w);
      }
    } else if (pd->parsed()) {
      const climate::ModelParams params;
      std::cout << params.dump();
      std::printf("hash %016llx\n", static_cast<unsigned long long>(params.hash()));
    } else if (hb->parsed()) {
      std::vector<trainer::PolicyFactory> policies;
      for (const auto& c : hb_checkpoints) policies.push_back(policy_for("greedy", c, 0));
      if (hb_random) policies.push_back(trainer::random_policy(1));
      if (policies.empty()) throw ConfigError("heldout-build needs --checkpoint or --random");
      trainer::EvalConfig ec;
      ec.first_year = hb_first;
      ec.last_year = hb_last;
      const auto set = trainer::build_held_out_set(policies, trainer::load_weather_spec(hb_weather),
                                                   *table_for(hb_table), interactive::parse_mechanism(hb_mechanism),
                                                   hb_stride, ec);
      trainer::save_held_out_set(set, hb_out);
      std::printf("wrote %zu labelled states to %s\n", set.size(), hb_out.c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const TrainingDivergedError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitDiverged;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
