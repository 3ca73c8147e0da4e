#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghrl/env/weather.hpp"
#include "ghrl/interactive/aux.hpp"
#include "ghrl/interactive/mechanisms.hpp"
#include "ghrl/ppo/ppo.hpp"

namespace ghrl::trainer {

enum class Selection { kRandom, kSelective };
enum class ProviderKind { kSimulated, kHumanService, kReplay };
// What a human-service query falls back to when its deadline passes.
enum class Fallback { kOracle, kEstimate, kSkip };

std::string to_string(Selection s);
std::string to_string(ProviderKind p);
std::string to_string(Fallback f);

// Every key of the config file; CLI flags use the same names with dashes.
struct TrainConfig {
  interactive::Mechanism mechanism = interactive::Mechanism::kBaseline;
  std::uint64_t seed = 100;

  // input incorporation
  double beta0 = 0.2;
  std::uint64_t beta_horizon = 400000;
  std::size_t n_inputs = 2048;
  Selection selection = Selection::kRandom;
  interactive::BehaviorLogProb behavior_logprob = interactive::BehaviorLogProb::kMixture;
  std::size_t input_capacity = 50000;
  int aux_iterations = 500;
  std::size_t aux_batch = 64;
  bool aux_full_batch = false;
  std::size_t aux_hidden = 256;
  std::size_t aux_depth = 3;
  double feedback_lr = 1e-3;
  double advice_lr = 1e-4;
  double error_lr = 1e-3;

  // PPO
  double lr = 1e-4;
  std::size_t n_steps = 2048;
  std::size_t batch = 256;
  double gamma = 0.97;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 10;
  double vf_coef = 0.5;
  double ent_coef = 1e-2;
  double max_grad_norm = 0.5;
  bool normalize_advantage = true;
  std::uint64_t total_steps = 500000;
  std::size_t hidden = 512;
  std::size_t depth = 4;

  // inputs
  ProviderKind provider = ProviderKind::kSimulated;
  std::string replay_file;
  double query_deadline_s = 120.0;
  Fallback fallback = Fallback::kOracle;

  // data and outputs
  std::string weather = "synthetic:2024";  // CSV path or synthetic:SEED
  std::string oracle_table;                // empty: build in memory
  std::string held_out;                    // optional held-out input set
  std::string output_dir;                  // empty: no files written
  int checkpoint_every = 10;
  bool evaluate_after = true;
  int train_first_year = 2011;
  int train_last_year = 2020;
  int test_first_year = 2021;
  int test_last_year = 2024;

  // Defaults for a mechanism: entropy coefficient and estimator learning rates.
  static TrainConfig defaults(interactive::Mechanism m);

  ppo::PpoHyper ppo() const;
  interactive::AuxConfig aux() const;
  // Throws ConfigError.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  // Mechanism defaults first, then every given key; unknown keys throw ConfigError.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::string& path);
};

// Key names in declaration order (for --help and the schema).
const std::vector<std::string>& config_keys();

// Loads `spec`: a CSV path, or "synthetic:SEED" for 2011-01-01 .. 2025-01-01
// synthesized in memory.
std::shared_ptr<const env::WeatherSeries> load_weather_spec(const std::string& spec);

}  // namespace ghrl::trainer
