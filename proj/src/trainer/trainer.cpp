#include "ghrl/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ghrl/errors.hpp"
#include "ghrl/nn/categorical.hpp"
#include "ghrl/nn/checkpoint.hpp"

namespace ghrl::trainer {

using interactive::Mechanism;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Stream : std::uint64_t { kInit = 1, kAgent, kEnv, kMech, kSelect, kAux };

env::TrainingWindow training_window(const TrainConfig& c) {
  env::TrainingWindow w;
  w.first_year = c.train_first_year;
  w.last_year = c.train_last_year;
  return w;
}

ppo::ActorCritic make_agent(const TrainConfig& c) {
  std::mt19937_64 init(stream_seed(c.seed, kInit));
  return ppo::ActorCritic(env::kObsSize, env::kNumActions, c.ppo(), init);
}

std::shared_ptr<const oracle::OptimalClimateTable> resolve_table(
    const TrainConfig& c, std::shared_ptr<const oracle::OptimalClimateTable> table,
    const climate::ModelParams& params) {
  if (table) return table;
  if (!c.oracle_table.empty()) {
    return std::make_shared<const oracle::OptimalClimateTable>(
        oracle::OptimalClimateTable::load(c.oracle_table, params));
  }
  return std::make_shared<const oracle::OptimalClimateTable>(
      oracle::build_optimal_table(params, oracle::GridSpec{}));
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over (seed, stream)
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + stream * 0xD1B54A32D192ED03ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Trainer::Trainer(TrainConfig config, std::shared_ptr<const env::WeatherSeries> weather,
                 std::shared_ptr<const oracle::OptimalClimateTable> table, InputProvider* provider)
    : config_((config.validate(), std::move(config))),
      weather_(std::move(weather)),
      env_(weather_),
      sampler_(*weather_, training_window(config_), env::kTrainEpisodeSteps),
      schedule_(config_.beta0, config_.beta_horizon),
      agent_rng_(stream_seed(config_.seed, kAgent)),
      env_rng_(stream_seed(config_.seed, kEnv)),
      mech_rng_(stream_seed(config_.seed, kMech)),
      select_rng_(stream_seed(config_.seed, kSelect)),
      aux_rng_(stream_seed(config_.seed, kAux)),
      agent_(make_agent(config_)),
      inputs_(config_.input_capacity) {
  const Mechanism m = config_.mechanism;
  if (interactive::uses_queries(m) || m == Mechanism::kFeedbackOnlyReward) {
    table_ = resolve_table(config_, std::move(table), env_.config().params);
  }
  if (interactive::uses_queries(m)) {
    aux_.emplace(env::kObsSize, config_.aux(), aux_rng_);
    if (provider != nullptr) {
      provider_ = provider;
    } else if (config_.provider == ProviderKind::kReplay) {
      owned_provider_ = std::make_unique<ReplayProvider>(config_.replay_file);
    } else if (config_.provider == ProviderKind::kSimulated) {
      owned_provider_ = std::make_unique<SimulatedProvider>(
          table_, m == Mechanism::kPolicyShapingConstraint);
    } else {
      throw ConfigError("provider human-service needs a running session service");
    }
    if (!provider_) provider_ = owned_provider_.get();
    if (!config_.held_out.empty()) held_out_ = load_held_out_set(config_.held_out);
  }
  begin_episode();
}

double Trainer::beta() const { return schedule_.active(steps_) ? schedule_.at(steps_) : 0.0; }

void Trainer::begin_episode() {
  const env::EpisodeStart s = sampler_.sample(env_rng_);
  obs_ = env_.reset(s.start, s.dry_weight);
  episode_raw_ = 0.0;
  episode_shaped_ = 0.0;
}

IntervalMetrics Trainer::run_interval() {
  if (finished()) throw UsageError("training already finished");
  const Mechanism mech = config_.mechanism;
  const ppo::PpoHyper hyper = config_.ppo();
  const std::size_t len =
      static_cast<std::size_t>(std::min<std::uint64_t>(config_.n_steps, config_.total_steps - steps_));
  const std::uint64_t interval_start = steps_;
  const bool estimators_live = aux_.has_value() && schedule_.active(interval_start);
  const bool keep_envs = interactive::wants_feedback(mech) && estimators_live;
  const bool mixture = config_.behavior_logprob == interactive::BehaviorLogProb::kMixture;

  ppo::RolloutBuffer buffer(len, env::kObsSize);
  std::vector<env::Observation> raw_obs(len);
  std::vector<env::Hour> times(len);
  std::vector<std::shared_ptr<const env::GreenhouseEnv>> snapshots(keep_envs ? len : 0);

  IntervalMetrics m;
  m.update = updates_ + 1;
  m.beta = beta();
  double ep_raw_sum = 0.0, ep_shaped_sum = 0.0;
  int overrides = 0;
  bool last_done = false;

  for (std::size_t t = 0; t < len; ++t) {
    if (hooks.before_step) hooks.before_step(steps_);
    const double b = beta();
    const auto x = scaling_.apply(obs_);
    const std::vector<double> logits = agent_.logits(x);
    const std::vector<double> probs = nn::softmax(logits);
    const double value = agent_.value(x);

    int action = 0;
    double log_prob = 0.0;
    bool agent_log_prob = true;
    if (interactive::wants_advice(mech) && estimators_live) {
      const auto shaped = interactive::shape_policy(probs, aux_->advice_estimate(x), b);
      action = nn::sample(shaped, agent_rng_);
      if (mixture && b > 0.0) {
        log_prob = std::log(std::max(shaped[static_cast<std::size_t>(action)], nn::kProbFloor));
        agent_log_prob = false;
      }
    } else if (mech == Mechanism::kControlSharing && estimators_live) {
      const auto f = aux_->feedback_estimates(x);
      const auto s = interactive::share_control(probs, f, b, agent_rng_, mech_rng_);
      action = s.action;
      overrides += s.overridden;
      if (mixture && b > 0.0) {
        log_prob = interactive::control_sharing_log_prob(probs, nn::argmax(f), action, b);
        agent_log_prob = false;
      }
    } else {
      action = nn::sample(probs, agent_rng_);
    }
    if (agent_log_prob) log_prob = nn::log_softmax(logits)[static_cast<std::size_t>(action)];

    raw_obs[t] = obs_;
    times[t] = env_.now();
    std::optional<env::GreenhouseEnv> before;
    if (keep_envs || mech == Mechanism::kFeedbackOnlyReward) before = env_;
    if (keep_envs) snapshots[t] = std::make_shared<const env::GreenhouseEnv>(*before);

    const env::StepResult r = env_.step(env::Action{action});
    const double raw = r.reward.total;
    double shaped = raw;
    if (mech == Mechanism::kRewardShaping && estimators_live) {
      shaped = interactive::shape_reward(raw, aux_->feedback_estimates(x)[static_cast<std::size_t>(action)], b);
    } else if (mech == Mechanism::kFeedbackOnlyReward) {
      shaped = oracle::binary_feedback(env::Action{action}, oracle::target_for(obs_, *table_),
                                       oracle::predict_all_actions(*before));
    }
    buffer.add(x, action, log_prob, shaped, value, r.done);
    ++steps_;
    m.reward_raw += raw;
    m.reward_shaped += shaped;
    episode_raw_ += raw;
    episode_shaped_ += shaped;
    if (hooks.on_step) hooks.on_step({steps_, env_.now(), r.obs});
    last_done = r.done;
    if (r.done) {
      ++m.episodes;
      ep_raw_sum += episode_raw_;
      ep_shaped_sum += episode_shaped_;
      begin_episode();
    } else {
      obs_ = r.obs;
    }
  }
  const double last_value = last_done ? 0.0 : agent_.value(scaling_.apply(obs_));
  ppo::compute_gae(buffer, last_value, hyper.gamma, hyper.lambda);

  // Select n steps and ask for inputs.
  if (estimators_live) {
    const std::size_t n = std::min(config_.n_inputs, len);
    const std::vector<std::size_t> picked =
        config_.selection == Selection::kRandom
            ? interactive::select_random(len, n, select_rng_)
            : interactive::select_selective(aux_->predicted_discrepancy(buffer.obs), n);
    std::vector<Query> queries;
    queries.reserve(picked.size());
    for (std::size_t i : picked) {
      Query q;
      q.id = next_query_id_++;
      q.step = interval_start + i;
      q.update = updates_ + 1;
      q.kind = interactive::wants_feedback(mech) ? oracle::InputKind::kFeedback : oracle::InputKind::kAdvice;
      q.obs = raw_obs[i];
      q.time = times[i];
      q.action = env::Action{buffer.actions[i]};
      if (keep_envs) q.env_before = snapshots[i];
      queries.push_back(std::move(q));
    }
    const EstimateFn estimate = [this](const Query& q) {
      const auto x = scaling_.apply(q.obs);
      oracle::GrowerInput in;
      in.kind = q.kind;
      if (q.kind == oracle::InputKind::kFeedback) {
        in.feedback = aux_->feedback_estimates(x)[static_cast<std::size_t>(q.action.index)] >= 0.0 ? 1 : -1;
      } else {
        const auto a = aux_->advice_estimate(x);
        std::copy(a.begin(), a.end(), in.advice.begin());
      }
      return in;
    };
    const std::vector<Answer> answers = provider_->answer(queries, estimate);
    if (answers.size() != queries.size()) throw UsageError("input provider returned a wrong answer count");
    for (std::size_t k = 0; k < queries.size(); ++k) {
      if (!answers[k].input) continue;
      interactive::InputRecord rec;
      rec.obs = scaling_.apply(queries[k].obs);
      rec.action = queries[k].action.index;
      rec.input = *answers[k].input;
      rec.step = queries[k].step;
      rec.discrepancy = aux_->realized_discrepancy(rec.obs, rec.action, rec.input);
      inputs_.add(std::move(rec));
      ++m.queries;
    }
  }

  m.ppo = agent_.update(buffer, hyper, agent_rng_);
  ++updates_;

  std::optional<AuxMetrics> aux_row;
  if (estimators_live && !inputs_.empty()) {
    AuxMetrics a;
    a.update = updates_;
    a.steps = steps_;
    a.records = inputs_.size();
    a.train = interactive::update_aux(*aux_, inputs_, config_.aux(), aux_rng_);
    if (held_out_) a.held_out = interactive::held_out_losses(*aux_, *held_out_);
    aux_row = a;
    aux_metrics_.push_back(a);
  } else if (estimators_live) {
    std::fprintf(stderr, "warning: update %llu: no grower inputs, estimator update skipped\n",
                 static_cast<unsigned long long>(updates_));
  }

  m.steps = steps_;
  m.reward_raw /= static_cast<double>(len);
  m.reward_shaped /= static_cast<double>(len);
  m.episode_return_raw = m.episodes ? ep_raw_sum / m.episodes : kNaN;
  m.episode_return_shaped = m.episodes ? ep_shaped_sum / m.episodes : kNaN;
  m.override_fraction = static_cast<double>(overrides) / static_cast<double>(len);
  metrics_.push_back(m);
  if (metrics_csv_) write_interval(m, aux_row ? &*aux_row : nullptr);
  if (hooks.on_interval) hooks.on_interval(m, aux_row ? &*aux_row : nullptr);
  return m;
}

void Trainer::write_outputs_header() {
  namespace fs = std::filesystem;
  const fs::path dir = config_.output_dir;
  fs::create_directories(dir / "checkpoints");
  {
    std::ofstream snap(dir / "config.snapshot");
    snap << config_.to_json().dump(2) << '\n';
  }
  metrics_csv_ = std::make_unique<std::ofstream>(dir / "metrics.csv");
  aux_csv_ = std::make_unique<std::ofstream>(dir / "aux_loss.csv");
  if (!*metrics_csv_ || !*aux_csv_) throw DataError("cannot write into " + dir.string());
  write_metrics_header(*metrics_csv_);
  write_aux_header(*aux_csv_);
  metrics_csv_->flush();
  aux_csv_->flush();
}

void Trainer::write_interval(const IntervalMetrics& m, const AuxMetrics* a) {
  write_metrics_row(*metrics_csv_, m);
  metrics_csv_->flush();
  if (a) {
    write_aux_row(*aux_csv_, *a);
    aux_csv_->flush();
  }
  if (config_.checkpoint_every > 0 && updates_ % static_cast<std::uint64_t>(config_.checkpoint_every) == 0) {
    char name[64];
    std::snprintf(name, sizeof name, "update_%06llu.ckpt", static_cast<unsigned long long>(updates_));
    save_checkpoint(std::filesystem::path(config_.output_dir) / "checkpoints" / name);
  }
}

void Trainer::run() {
  const bool write = !config_.output_dir.empty();
  if (write && !metrics_csv_) write_outputs_header();
  while (!finished()) run_interval();
  const std::filesystem::path dir = config_.output_dir;
  if (write) save_checkpoint(dir / "checkpoints" / "final.ckpt");
  if (!config_.evaluate_after) return;
  EvalConfig ec;
  ec.first_year = config_.test_first_year;
  ec.last_year = config_.test_last_year;
  auto agent = std::make_shared<const ppo::ActorCritic>(agent_);
  report_ = evaluate(greedy_policy(agent, scaling_), weather_, env_.config(), ec);
  if (!write) return;
  std::filesystem::create_directories(dir / "eval");
  std::ofstream out(dir / "eval" / "report.csv");
  report_->write_csv(out);
  std::ofstream hourly(dir / "eval" / "hourly.csv");
  report_->write_hourly_csv(hourly);
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  nn::Archive ar;
  ar.put("config", config_.to_json().dump());
  ar.put_u64("steps", steps_);
  ar.put_u64("updates", updates_);
  nn::save_mlp(ar, "actor", agent_.actor);
  nn::save_mlp(ar, "critic", agent_.critic);
  nn::save_adam(ar, "actor_opt", agent_.actor_opt);
  nn::save_adam(ar, "critic_opt", agent_.critic_opt);
  if (aux_) {
    nn::save_mlp(ar, "aux.feedback", aux_->feedback);
    nn::save_mlp(ar, "aux.advice", aux_->advice);
    nn::save_mlp(ar, "aux.error", aux_->error);
    nn::save_adam(ar, "aux.feedback_opt", aux_->feedback_opt);
    nn::save_adam(ar, "aux.advice_opt", aux_->advice_opt);
    nn::save_adam(ar, "aux.error_opt", aux_->error_opt);
    ar.put_u64("aux.trained", aux_->trained ? 1 : 0);
  }
  nn::save_rng(ar, "rng.agent", agent_rng_);
  nn::save_rng(ar, "rng.env", env_rng_);
  nn::save_rng(ar, "rng.mech", mech_rng_);
  nn::save_rng(ar, "rng.select", select_rng_);
  nn::save_rng(ar, "rng.aux", aux_rng_);
  ar.save(path);
}

ppo::ActorCritic load_agent(const std::filesystem::path& checkpoint) {
  const nn::Archive ar = nn::Archive::load(checkpoint);
  ppo::ActorCritic ac;
  ac.actor = nn::load_mlp(ar, "actor");
  ac.critic = nn::load_mlp(ar, "critic");
  ac.actor_opt = nn::load_adam(ar, "actor_opt");
  ac.critic_opt = nn::load_adam(ar, "critic_opt");
  if (ac.actor.input_size() != env::kObsSize || ac.actor.output_size() != env::kNumActions) {
    throw FormatError("checkpoint actor does not match the observation/action sizes");
  }
  return ac;
}

TrainConfig load_checkpoint_config(const std::filesystem::path& checkpoint) {
  const nn::Archive ar = nn::Archive::load(checkpoint);
  return TrainConfig::from_json(nlohmann::json::parse(ar.text("config")));
}

namespace {
void put(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, ",%.17g", v);
  out << buf;
}
}  // namespace

void write_metrics_header(std::ostream& out) {
  out << "update,steps,beta,queries,episodes,rollout_reward_raw,rollout_reward_shaped,"
         "episode_return_raw,episode_return_shaped,override_fraction,policy_loss,value_loss,"
         "entropy,approx_kl,clip_fraction,grad_norm\n";
}

void write_metrics_row(std::ostream& out, const IntervalMetrics& m) {
  out << m.update << ',' << m.steps;
  put(out, m.beta);
  out << ',' << m.queries << ',' << m.episodes;
  for (double v : {m.reward_raw, m.reward_shaped, m.episode_return_raw, m.episode_return_shaped,
                   m.override_fraction, m.ppo.policy_loss, m.ppo.value_loss, m.ppo.entropy,
                   m.ppo.approx_kl, m.ppo.clip_fraction, m.ppo.grad_norm}) {
    put(out, v);
  }
  out << '\n';
}

void write_aux_header(std::ostream& out) {
  out << "update,steps,records,feedback_loss,advice_loss,error_loss,heldout_feedback_loss,"
         "heldout_advice_loss,heldout_error_loss\n";
}

void write_aux_row(std::ostream& out, const AuxMetrics& m) {
  out << m.update << ',' << m.steps << ',' << m.records;
  for (double v : {m.train.feedback, m.train.advice, m.train.error}) put(out, v);
  for (double v : {m.held_out ? m.held_out->feedback : kNaN, m.held_out ? m.held_out->advice : kNaN,
                   m.held_out ? m.held_out->error : kNaN}) {
    put(out, v);
  }
  out << '\n';
}

interactive::HeldOutSet build_held_out_set(const std::vector<PolicyFactory>& policies,
                                           std::shared_ptr<const env::WeatherSeries> weather,
                                           const oracle::OptimalClimateTable& table,
                                           Mechanism mechanism, int stride, const EvalConfig& eval) {
  if (!interactive::uses_queries(mechanism)) throw ConfigError("mechanism takes no grower input");
  if (stride <= 0) throw ConfigError("stride must be positive");
  const bool feedback = interactive::wants_feedback(mechanism);
  const std::shared_ptr<const oracle::OptimalClimateTable> shared(&table, [](auto*) {});
  SimulatedProvider grower(shared, mechanism == Mechanism::kPolicyShapingConstraint);
  const env::ObservationScaling scaling;
  interactive::HeldOutSet set;
  for (const PolicyFactory& factory : policies) {
    PolicyFn policy = factory();
    for (const env::TestWindow& w :
         env::test_trajectories(*weather, eval.first_year, eval.last_year, eval.days)) {
      env::EnvConfig cfg;
      cfg.episode_steps = w.steps;
      env::GreenhouseEnv e(weather, cfg);
      env::Observation obs = e.reset(w.start, eval.initial_dry_weight);
      for (int t = 0; !e.done(); ++t) {
        const env::Action a = policy(obs);
        if (t % stride == 0) {
          Query q;
          q.kind = feedback ? oracle::InputKind::kFeedback : oracle::InputKind::kAdvice;
          q.obs = obs;
          q.action = a;
          if (feedback) q.env_before = std::make_shared<const env::GreenhouseEnv>(e);
          set.obs.push_back(scaling.apply(obs));
          set.actions.push_back(a.index);
          set.inputs.push_back(grower.label(q));
        }
        obs = e.step(a).obs;
      }
    }
  }
  return set;
}

void save_held_out_set(const interactive::HeldOutSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < set.size(); ++i) {
    nlohmann::json j = {{"obs", set.obs[i]}, {"action", set.actions[i]}};
    j["input"] = input_to_json(set.inputs[i]);
    out << j.dump() << '\n';
  }
}

interactive::HeldOutSet load_held_out_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open held-out set " + path.string());
  interactive::HeldOutSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto o = j.at("obs").get<std::vector<double>>();
      if (o.size() != env::kObsSize) throw DataError("observation width");
      interactive::NormObs x;
      std::copy(o.begin(), o.end(), x.begin());
      set.obs.push_back(x);
      set.actions.push_back(j.at("action").get<int>());
      set.inputs.push_back(input_from_json(j.at("input")));
    } catch (const std::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return set;
}

void train(const TrainConfig& config) {
  Trainer t(config, load_weather_spec(config.weather));
  t.run();
}

}  // namespace ghrl::trainer
