#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ghrl/trainer/config.hpp"
#include "ghrl/trainer/eval.hpp"
#include "ghrl/trainer/provider.hpp"

namespace ghrl::service {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class Status { kCreated, kRunning, kAwaitingInput, kPaused, kFinished, kFailed };
const char* to_string(Status s);

// Errors mapped onto HTTP status codes by the server.
struct NotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Conflict : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Invalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Event {
  std::uint64_t seq = 0;  // 1-based, per session
  std::string type;       // status | interval | climate | queries
  Json data;
};

// Parses an answer body for a query of the given kind: {"feedback": +-1},
// {"advice": [27 probabilities]} or {"advice": {"d_temp": x, "d_co2": y}}.
// The simplified form becomes uniform advice over the actions whose new
// setpoints are closest to the current setpoints plus the deltas. Throws
// Invalid.
oracle::GrowerInput parse_answer(const Json& body, oracle::InputKind kind, const env::Observation& obs);

Json snapshot_json(std::uint64_t step, env::Hour time, const env::Observation& obs);
Json report_json(const trainer::EvalReport& report);

// Read-only inputs shared by all sessions.
struct Resources {
  std::function<std::shared_ptr<const env::WeatherSeries>(const std::string&)> weather;
  std::function<std::shared_ptr<const oracle::OptimalClimateTable>(const std::string&)> table;
};

// Loads each weather spec and oracle table path once (empty path: build the
// table in memory).
Resources cached_resources();

// One training run driven from the API. Training runs on its own thread;
// the API side talks to it through the session's lock and condition
// variable.
class Session {
 public:
  Session(std::string id, trainer::TrainConfig config, Resources resources, int climate_every = 24);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  const trainer::TrainConfig& config() const { return config_; }

  void start();
  void pause();
  void resume();
  // Stops the training thread at the next step; the session ends failed.
  void cancel();
  // Blocks until finished or failed.
  void wait() const;

  Status status() const;
  Json status_json() const;
  Json pending_json() const;
  // {"accepted": bool, "remaining": k, "notice": ...}
  Json answer(const std::string& query_id, const Json& body);
  Json eval_json() const;

  // Events with seq > after; waits up to `timeout` when none are available.
  std::vector<Event> events_after(std::uint64_t after, std::chrono::milliseconds timeout) const;
  bool terminal() const;
  std::uint64_t last_seq() const;

 private:
  class HumanProvider;
  struct Pending {
    trainer::Query query;
    std::chrono::steady_clock::time_point deadline;
    std::chrono::system_clock::time_point deadline_wall;
    std::optional<oracle::GrowerInput> input;
  };

  void run();
  void set_status(Status s);  // lock held
  void push(std::string type, Json data);  // lock held
  Json query_json(const std::string& id, const Pending& p) const;
  std::vector<trainer::Answer> collect(const std::vector<trainer::Query>& queries,
                                       const trainer::EstimateFn& estimate);

  std::string id_;
  trainer::TrainConfig config_;
  Resources resources_;
  int climate_every_;
  std::unique_ptr<trainer::SimulatedProvider> oracle_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  Status status_ = Status::kCreated;
  bool pause_requested_ = false;
  bool cancel_ = false;
  std::string error_;
  std::uint64_t step_ = 0;
  std::uint64_t update_ = 0;
  std::map<std::string, Pending> pending_;
  std::map<std::string, std::string> resolved_;  // query id -> answer source
  std::vector<Event> events_;
  std::optional<trainer::EvalReport> report_;
  std::thread thread_;
};

class SessionManager {
 public:
  SessionManager(Resources resources, std::filesystem::path runs_dir, int climate_every = 24);
  ~SessionManager();

  // Body: TrainConfig keys. Sessions default to the human-service provider
  // and to runs_dir/<id> as output directory. Throws Invalid.
  std::shared_ptr<Session> create(const Json& body);
  std::shared_ptr<Session> get(const std::string& id) const;  // throws NotFound
  std::vector<std::shared_ptr<Session>> list() const;
  void shutdown();

 private:
  Resources resources_;
  std::filesystem::path runs_dir_;
  int climate_every_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace ghrl::service
