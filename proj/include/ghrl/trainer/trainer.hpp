#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "ghrl/env/environment.hpp"
#include "ghrl/interactive/aux.hpp"
#include "ghrl/oracle/oracle.hpp"
#include "ghrl/ppo/ppo.hpp"
#include "ghrl/trainer/config.hpp"
#include "ghrl/trainer/eval.hpp"
#include "ghrl/trainer/provider.hpp"

namespace ghrl::trainer {

struct IntervalMetrics {
  std::uint64_t update = 0;  // 1-based
  std::uint64_t steps = 0;   // total environment steps after this interval
  double beta = 0.0;         // at the start of the interval
  std::size_t queries = 0;
  int episodes = 0;          // finished during the interval
  double reward_raw = 0.0;   // mean per-step reward
  double reward_shaped = 0.0;
  double episode_return_raw = 0.0;  // mean over finished episodes (NaN if none)
  double episode_return_shaped = 0.0;
  double override_fraction = 0.0;
  ppo::UpdateStats ppo;
};

struct AuxMetrics {
  std::uint64_t update = 0;
  std::uint64_t steps = 0;
  std::size_t records = 0;
  interactive::AuxLosses train;
  std::optional<interactive::AuxLosses> held_out;
};

struct ClimateSnapshot {
  std::uint64_t step = 0;
  env::Hour time = 0;
  env::Observation obs;
};

struct Hooks {
  // Called before every environment step; may block (pausing).
  std::function<void(std::uint64_t step)> before_step;
  std::function<void(const ClimateSnapshot&)> on_step;
  std::function<void(const IntervalMetrics&, const AuxMetrics*)> on_interval;
};

// One interval: collect n_steps with the mechanism in the loop, query n of
// them, PPO update, then N estimator iterations.
class Trainer {
 public:
  // `table` may be null (built in memory); `provider` null selects the
  // config's simulated or replay provider.
  Trainer(TrainConfig config, std::shared_ptr<const env::WeatherSeries> weather,
          std::shared_ptr<const oracle::OptimalClimateTable> table = nullptr,
          InputProvider* provider = nullptr);

  bool finished() const { return steps_ >= config_.total_steps; }
  IntervalMetrics run_interval();
  // All intervals, then the optional evaluation; writes the run directory
  // when output_dir is set.
  void run();

  const TrainConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }
  std::uint64_t updates() const { return updates_; }
  const ppo::ActorCritic& agent() const { return agent_; }
  const interactive::AuxNets* aux() const { return aux_ ? &*aux_ : nullptr; }
  const interactive::InputBuffer& inputs() const { return inputs_; }
  const std::vector<IntervalMetrics>& metrics() const { return metrics_; }
  const std::vector<AuxMetrics>& aux_metrics() const { return aux_metrics_; }
  const env::GreenhouseEnv& environment() const { return env_; }
  std::shared_ptr<const oracle::OptimalClimateTable> table() const { return table_; }
  double beta() const;
  // Set by run() when evaluate_after is on.
  const std::optional<EvalReport>& final_report() const { return report_; }

  void set_held_out(interactive::HeldOutSet set) { held_out_ = std::move(set); }
  void save_checkpoint(const std::filesystem::path& path) const;

  Hooks hooks;

 private:
  void begin_episode();
  void write_outputs_header();
  void write_interval(const IntervalMetrics& m, const AuxMetrics* a);

  TrainConfig config_;
  std::shared_ptr<const env::WeatherSeries> weather_;
  std::shared_ptr<const oracle::OptimalClimateTable> table_;
  std::unique_ptr<InputProvider> owned_provider_;
  InputProvider* provider_ = nullptr;
  env::ObservationScaling scaling_;
  env::GreenhouseEnv env_;
  env::EpisodeSampler sampler_;
  interactive::BetaSchedule schedule_;

  std::mt19937_64 agent_rng_, env_rng_, mech_rng_, select_rng_, aux_rng_;
  ppo::ActorCritic agent_;
  std::optional<interactive::AuxNets> aux_;
  interactive::InputBuffer inputs_;
  std::optional<interactive::HeldOutSet> held_out_;

  env::Observation obs_;
  double episode_raw_ = 0.0;
  double episode_shaped_ = 0.0;
  std::uint64_t steps_ = 0;
  std::uint64_t updates_ = 0;
  std::uint64_t next_query_id_ = 0;
  std::vector<IntervalMetrics> metrics_;
  std::vector<AuxMetrics> aux_metrics_;
  std::optional<EvalReport> report_;

  std::unique_ptr<std::ofstream> metrics_csv_;
  std::unique_ptr<std::ofstream> aux_csv_;
};

// Seeds of the independent random streams of a run.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

ppo::ActorCritic load_agent(const std::filesystem::path& checkpoint);
TrainConfig load_checkpoint_config(const std::filesystem::path& checkpoint);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const IntervalMetrics& m);
void write_aux_header(std::ostream& out);
void write_aux_row(std::ostream& out, const AuxMetrics& m);

// Held-out inputs: every `stride`-th step of each policy's greedy rollout
// through the test windows, labelled by the simulated grower.
interactive::HeldOutSet build_held_out_set(const std::vector<PolicyFactory>& policies,
                                           std::shared_ptr<const env::WeatherSeries> weather,
                                           const oracle::OptimalClimateTable& table,
                                           interactive::Mechanism mechanism, int stride,
                                           const EvalConfig& eval = {});
void save_held_out_set(const interactive::HeldOutSet& set, const std::filesystem::path& path);
interactive::HeldOutSet load_held_out_set(const std::filesystem::path& path);

// Convenience: build a Trainer from the config alone and run it.
void train(const TrainConfig& config);

}  // namespace ghrl::trainer
