#include "ghrl/service/session.hpp"

#include <cmath>
#include <ctime>

#include "ghrl/errors.hpp"
#include "ghrl/trainer/trainer.hpp"

namespace ghrl::service {

namespace {

struct Cancelled {};

std::string iso_utc(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool same_input(const oracle::GrowerInput& a, const oracle::GrowerInput& b) {
  if (a.kind != b.kind) return false;
  return a.kind == oracle::InputKind::kFeedback ? a.feedback == b.feedback : a.advice == b.advice;
}

Json losses_json(const interactive::AuxLosses& l) {
  return {{"feedback", l.feedback}, {"advice", l.advice}, {"error", l.error}, {"iterations", l.iterations}};
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::kCreated: return "created";
    case Status::kRunning: return "running";
    case Status::kAwaitingInput: return "awaiting-input";
    case Status::kPaused: return "paused";
    case Status::kFinished: return "finished";
    case Status::kFailed: return "failed";
  }
  return "?";
}

oracle::GrowerInput parse_answer(const Json& body, oracle::InputKind kind, const env::Observation& obs) {
  if (!body.is_object()) throw Invalid("answer must be a JSON object");
  oracle::GrowerInput in;
  in.kind = kind;
  if (kind == oracle::InputKind::kFeedback) {
    if (!body.contains("feedback")) throw Invalid("feedback query: expected {\"feedback\": 1 | -1}");
    const Json& f = body.at("feedback");
    if (!f.is_number() || (f.get<double>() != 1.0 && f.get<double>() != -1.0)) {
      throw Invalid("feedback must be +1 or -1");
    }
    in.feedback = f.get<double>() > 0 ? 1 : -1;
    return in;
  }
  if (!body.contains("advice")) throw Invalid("advice query: expected {\"advice\": ...}");
  const Json& a = body.at("advice");
  if (a.is_array()) {
    if (a.size() != env::kNumActions) throw Invalid("advice vector must have 27 entries");
    for (std::size_t i = 0; i < env::kNumActions; ++i) {
      if (!a[i].is_number()) throw Invalid("advice entries must be numbers");
      in.advice[i] = a[i].get<double>();
    }
    try {
      trainer::validate_advice(in.advice);
    } catch (const DataError& e) {
      throw Invalid(e.what());
    }
    return in;
  }
  if (a.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (k != "d_temp" && k != "d_co2") throw Invalid("simplified advice: unknown field '" + k + "'");
    }
    const Json dt = a.value("d_temp", Json(0.0));
    const Json dc = a.value("d_co2", Json(0.0));
    if (!dt.is_number() || !dc.is_number() || !std::isfinite(dt.get<double>()) ||
        !std::isfinite(dc.get<double>())) {
      throw Invalid("simplified advice needs numeric d_temp and d_co2");
    }
    const oracle::ClimateTarget target{obs[env::kTempSetpoint] + dt.get<double>(),
                                       obs[env::kCo2Setpoint] + dc.get<double>()};
    in.advice = oracle::advice_toward(obs, target);
    return in;
  }
  throw Invalid("advice must be a 27-vector or {\"d_temp\", \"d_co2\"}");
}

Json snapshot_json(std::uint64_t step, env::Hour time, const env::Observation& obs) {
  Json j = {{"step", step}, {"time", env::format_hour(time)}};
  for (std::size_t i = 0; i < env::kObsSize; ++i) j[env::kObsNames[i]] = obs[i];
  return j;
}

Json report_json(const trainer::EvalReport& report) {
  auto traj = [](const trainer::TrajectoryMetrics& m) {
    return Json{{"label", m.label},
                {"cumulative_reward_hfl_m2", m.cumulative_reward},
                {"dry_weight_kg_m2", m.dry_weight},
                {"heat_j_m2", m.heat},
                {"co2_kg_m2", m.co2},
                {"violation_hours", m.violation_hours},
                {"steps", m.steps}};
  };
  Json out = {{"schema_version", kSchemaVersion}, {"trajectories", Json::array()}};
  for (const auto& t : report.trajectories) out["trajectories"].push_back(traj(t));
  out["aggregate"] = traj(report.aggregate);
  Json hourly = Json::array();
  for (int h = 0; h < 24; ++h) {
    Json row = {{"hour", h}, {"count", report.hourly.count[h]}};
    for (std::size_t k = 0; k < trainer::HourlyProfile::kFields; ++k) {
      row[trainer::HourlyProfile::kNames[k]] = report.hourly.mean[h][k];
    }
    hourly.push_back(row);
  }
  out["hourly"] = hourly;
  return out;
}

class Session::HumanProvider : public trainer::InputProvider {
 public:
  explicit HumanProvider(Session& s) : session_(s) {}
  std::vector<trainer::Answer> answer(const std::vector<trainer::Query>& queries,
                                      const trainer::EstimateFn& estimate) override {
    return session_.collect(queries, estimate);
  }

 private:
  Session& session_;
};

Session::Session(std::string id, trainer::TrainConfig config, Resources resources, int climate_every)
    : id_(std::move(id)), config_(std::move(config)), resources_(std::move(resources)),
      climate_every_(climate_every) {
  push("status", {{"status", to_string(status_)}});
}

Session::~Session() {
  cancel();
  if (thread_.joinable()) thread_.join();
}

void Session::set_status(Status s) {
  status_ = s;
  Json data = {{"status", to_string(s)}, {"step", step_}};
  if (s == Status::kFailed) data["error"] = error_;
  push("status", std::move(data));
}

void Session::push(std::string type, Json data) {
  events_.push_back({events_.size() + 1, std::move(type), std::move(data)});
  cv_.notify_all();
}

void Session::start() {
  std::lock_guard lk(mu_);
  if (status_ != Status::kCreated) {
    throw Conflict(std::string("cannot start a session that is ") + to_string(status_));
  }
  set_status(Status::kRunning);
  thread_ = std::thread(&Session::run, this);
}

void Session::pause() {
  std::lock_guard lk(mu_);
  if (status_ != Status::kRunning) {
    throw Conflict(std::string("cannot pause a session that is ") + to_string(status_));
  }
  pause_requested_ = true;
  set_status(Status::kPaused);
}

void Session::resume() {
  std::lock_guard lk(mu_);
  if (status_ != Status::kPaused) {
    throw Conflict(std::string("cannot resume a session that is ") + to_string(status_));
  }
  pause_requested_ = false;
  set_status(Status::kRunning);
}

void Session::cancel() {
  std::lock_guard lk(mu_);
  cancel_ = true;
  if (status_ == Status::kCreated) {
    error_ = "cancelled";
    set_status(Status::kFailed);
  }
  cv_.notify_all();
}

void Session::wait() const {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return status_ == Status::kFinished || status_ == Status::kFailed; });
}

Status Session::status() const {
  std::lock_guard lk(mu_);
  return status_;
}

bool Session::terminal() const {
  std::lock_guard lk(mu_);
  return status_ == Status::kFinished || status_ == Status::kFailed;
}

std::uint64_t Session::last_seq() const {
  std::lock_guard lk(mu_);
  return events_.size();
}

Json Session::status_json() const {
  std::lock_guard lk(mu_);
  std::size_t waiting = 0;
  for (const auto& [id, p] : pending_) waiting += p.input ? 0 : 1;
  const interactive::BetaSchedule schedule(config_.beta0, config_.beta_horizon);
  Json j = {{"schema_version", kSchemaVersion},
            {"id", id_},
            {"status", to_string(status_)},
            {"progress",
             {{"step", step_},
              {"total_steps", config_.total_steps},
              {"update", update_},
              {"beta", config_.mechanism == interactive::Mechanism::kBaseline ? 0.0 : schedule.at(step_)}}},
            {"pending_queries", waiting},
            {"timeout_policy",
             {{"deadline_s", config_.query_deadline_s}, {"fallback", trainer::to_string(config_.fallback)}}},
            {"config", config_.to_json()}};
  if (!error_.empty()) j["error"] = error_;
  return j;
}

Json Session::query_json(const std::string& id, const Pending& p) const {
  const trainer::Query& q = p.query;
  const bool feedback = q.kind == oracle::InputKind::kFeedback;
  const auto left = std::chrono::duration<double>(p.deadline - std::chrono::steady_clock::now()).count();
  Json j = {{"id", id},
            {"step", q.step},
            {"update", q.update},
            {"kind", feedback ? "feedback" : "advice"},
            {"time", env::format_hour(q.time)},
            {"hour", q.obs[env::kHourOfDay]}};
  Json ctx;
  for (std::size_t i = 0; i < env::kObsSize; ++i) ctx[env::kObsNames[i]] = q.obs[i];
  j["context"] = ctx;
  if (feedback) {
    j["action"] = {{"index", q.action.index},
                   {"d_temp", q.action.temp_delta()},
                   {"d_vent", q.action.vent_delta()},
                   {"d_co2", q.action.co2_delta()}};
  }
  j["deadline"] = iso_utc(p.deadline_wall);
  j["deadline_in_s"] = std::max(0.0, left);
  return j;
}

Json Session::pending_json() const {
  std::lock_guard lk(mu_);
  Json list = Json::array();
  for (const auto& [id, p] : pending_) {
    if (!p.input) list.push_back(query_json(id, p));
  }
  return {{"schema_version", kSchemaVersion}, {"status", to_string(status_)}, {"queries", list}};
}

Json Session::answer(const std::string& query_id, const Json& body) {
  std::lock_guard lk(mu_);
  auto remaining = [&] {
    std::size_t n = 0;
    for (const auto& [id, p] : pending_) n += p.input ? 0 : 1;
    return n;
  };
  const auto it = pending_.find(query_id);
  if (it == pending_.end()) {
    const auto r = resolved_.find(query_id);
    if (r == resolved_.end()) throw NotFound("no query '" + query_id + "' in session " + id_);
    return {{"accepted", false},
            {"remaining", remaining()},
            {"notice", "query already resolved (source: " + r->second + "); answer ignored"}};
  }
  Pending& p = it->second;
  if (std::chrono::steady_clock::now() > p.deadline) {
    return {{"accepted", false}, {"remaining", remaining()}, {"notice", "deadline passed; answer ignored"}};
  }
  const oracle::GrowerInput in = parse_answer(body, p.query.kind, p.query.obs);
  if (p.input) {
    if (!same_input(*p.input, in)) throw Conflict("query '" + query_id + "' already has a different answer");
  } else {
    p.input = in;
    cv_.notify_all();
  }
  return {{"accepted", true}, {"remaining", remaining()}};
}

Json Session::eval_json() const {
  std::lock_guard lk(mu_);
  if (!report_) {
    throw Conflict(std::string("no evaluation report: session is ") + to_string(status_) +
                   (config_.evaluate_after ? "" : " and evaluate_after is off"));
  }
  return report_json(*report_);
}

std::vector<Event> Session::events_after(std::uint64_t after, std::chrono::milliseconds timeout) const {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, timeout, [&] {
    return events_.size() > after || status_ == Status::kFinished || status_ == Status::kFailed;
  });
  if (events_.size() <= after) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

std::vector<trainer::Answer> Session::collect(const std::vector<trainer::Query>& queries,
                                              const trainer::EstimateFn& estimate) {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return !pause_requested_ || cancel_; });
  if (cancel_) throw Cancelled{};
  if (queries.empty()) return {};
  const auto wait = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(config_.query_deadline_s));
  const auto deadline = std::chrono::steady_clock::now() + wait;
  const auto deadline_wall = std::chrono::system_clock::now() +
                             std::chrono::duration_cast<std::chrono::system_clock::duration>(wait);
  std::vector<std::string> ids;
  for (const trainer::Query& q : queries) {
    const std::string id = "q" + std::to_string(q.id);
    pending_[id] = {q, deadline, deadline_wall, std::nullopt};
    ids.push_back(id);
  }
  set_status(Status::kAwaitingInput);
  push("queries", {{"update", queries.front().update},
                   {"count", ids.size()},
                   {"ids", ids},
                   {"deadline", iso_utc(deadline_wall)}});
  cv_.wait_until(lk, deadline, [&] {
    if (cancel_) return true;
    for (const auto& id : ids) {
      if (!pending_.at(id).input) return false;
    }
    return true;
  });
  if (cancel_) throw Cancelled{};

  std::vector<trainer::Answer> answers;
  std::size_t human = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    Pending& p = pending_.at(ids[k]);
    trainer::Answer a;
    if (p.input) {
      a = {p.input, "human"};
      ++human;
    } else {
      switch (config_.fallback) {
        case trainer::Fallback::kOracle: a = {oracle_->label(queries[k]), "oracle"}; break;
        case trainer::Fallback::kEstimate: a = {estimate(queries[k]), "estimate"}; break;
        case trainer::Fallback::kSkip: a = {std::nullopt, "skip"}; break;
      }
    }
    resolved_[ids[k]] = a.source;
    pending_.erase(ids[k]);
    answers.push_back(std::move(a));
  }
  push("queries_resolved", {{"update", queries.front().update},
                            {"human", human},
                            {"fallback", ids.size() - human},
                            {"fallback_kind", trainer::to_string(config_.fallback)}});
  set_status(Status::kRunning);
  return answers;
}

void Session::run() {
  try {
    const auto weather = resources_.weather(config_.weather);
    const auto table = resources_.table(config_.oracle_table);
    std::unique_ptr<HumanProvider> human;
    std::unique_ptr<trainer::RecordingProvider> recorder;
    trainer::InputProvider* provider = nullptr;
    if (config_.provider == trainer::ProviderKind::kHumanService) {
      oracle_ = std::make_unique<trainer::SimulatedProvider>(
          table, config_.mechanism == interactive::Mechanism::kPolicyShapingConstraint);
      human = std::make_unique<HumanProvider>(*this);
      provider = human.get();
      if (!config_.output_dir.empty()) {
        std::filesystem::create_directories(config_.output_dir);
        recorder = std::make_unique<trainer::RecordingProvider>(
            *human, std::filesystem::path(config_.output_dir) / "answers.jsonl");
        provider = recorder.get();
      }
    }
    trainer::Trainer t(config_, weather, table, provider);
    trainer::ClimateSnapshot latest{0, 0, {}};
    t.hooks.before_step = [this](std::uint64_t step) {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return !pause_requested_ || cancel_; });
      if (cancel_) throw Cancelled{};
      step_ = step;
    };
    t.hooks.on_step = [this, &latest](const trainer::ClimateSnapshot& s) {
      latest = s;
      std::lock_guard lk(mu_);
      step_ = s.step;
      if (climate_every_ > 0 && s.step % static_cast<std::uint64_t>(climate_every_) == 0) {
        push("climate", snapshot_json(s.step, s.time, s.obs));
      }
    };
    t.hooks.on_interval = [this, &latest](const trainer::IntervalMetrics& m, const trainer::AuxMetrics* a) {
      Json data = {{"update", m.update},
                   {"step", m.steps},
                   {"beta", m.beta},
                   {"queries", m.queries},
                   {"episodes", m.episodes},
                   {"reward_raw", m.reward_raw},
                   {"reward_shaped", m.reward_shaped},
                   {"episode_return_raw", m.episode_return_raw},
                   {"episode_return_shaped", m.episode_return_shaped},
                   {"override_fraction", m.override_fraction},
                   {"ppo",
                    {{"policy_loss", m.ppo.policy_loss},
                     {"value_loss", m.ppo.value_loss},
                     {"entropy", m.ppo.entropy},
                     {"approx_kl", m.ppo.approx_kl},
                     {"clip_fraction", m.ppo.clip_fraction},
                     {"grad_norm", m.ppo.grad_norm}}}};
      if (a) {
        data["aux"] = {{"records", a->records}, {"train", losses_json(a->train)}};
        data["aux"]["held_out"] = a->held_out ? losses_json(*a->held_out) : Json(nullptr);
      } else {
        data["aux"] = nullptr;
      }
      data["climate"] = snapshot_json(latest.step, latest.time, latest.obs);
      std::lock_guard lk(mu_);
      update_ = m.update;
      push("interval", std::move(data));
    };
    t.run();
    std::lock_guard lk(mu_);
    report_ = t.final_report();
    set_status(Status::kFinished);
  } catch (const Cancelled&) {
    std::lock_guard lk(mu_);
    error_ = "cancelled";
    set_status(Status::kFailed);
  } catch (const std::exception& e) {
    std::lock_guard lk(mu_);
    error_ = e.what();
    set_status(Status::kFailed);
  }
}

Resources cached_resources() {
  struct Cache {
    std::mutex mu;
    std::map<std::string, std::shared_ptr<const env::WeatherSeries>> weather;
    std::map<std::string, std::shared_ptr<const oracle::OptimalClimateTable>> tables;
  };
  auto cache = std::make_shared<Cache>();
  Resources r;
  r.weather = [cache](const std::string& spec) {
    std::lock_guard lk(cache->mu);
    auto& w = cache->weather[spec];
    if (!w) w = trainer::load_weather_spec(spec);
    return w;
  };
  r.table = [cache](const std::string& path) {
    std::lock_guard lk(cache->mu);
    auto& t = cache->tables[path];
    if (!t) {
      const climate::ModelParams params;
      t = std::make_shared<const oracle::OptimalClimateTable>(
          path.empty() ? oracle::build_optimal_table(params, oracle::GridSpec{})
                       : oracle::OptimalClimateTable::load(path, params));
    }
    return t;
  };
  return r;
}

SessionManager::SessionManager(Resources resources, std::filesystem::path runs_dir, int climate_every)
    : resources_(std::move(resources)), runs_dir_(std::move(runs_dir)), climate_every_(climate_every) {}

SessionManager::~SessionManager() { shutdown(); }

std::shared_ptr<Session> SessionManager::create(const Json& body) {
  if (!body.is_object()) throw Invalid("session body must be a JSON object of config keys");
  nlohmann::json cfg = nlohmann::json::parse(body.dump());
  if (!cfg.contains("provider")) cfg["provider"] = "human-service";
  std::lock_guard lk(mu_);
  const std::string id = "s" + std::to_string(next_id_);
  if (!cfg.contains("output_dir") && !runs_dir_.empty()) cfg["output_dir"] = (runs_dir_ / id).string();
  trainer::TrainConfig config;
  try {
    config = trainer::TrainConfig::from_json(cfg);
    resources_.weather(config.weather);
  } catch (const std::exception& e) {
    throw Invalid(e.what());
  }
  ++next_id_;
  auto s = std::make_shared<Session>(id, std::move(config), resources_, climate_every_);
  sessions_[id] = s;
  return s;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lk(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("no session '" + id + "'");
  return it->second;
}

std::vector<std::shared_ptr<Session>> SessionManager::list() const {
  std::lock_guard lk(mu_);
  std::vector<std::shared_ptr<Session>> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

void SessionManager::shutdown() {
  for (const auto& s : list()) s->cancel();
}

}  // namespace ghrl::service
