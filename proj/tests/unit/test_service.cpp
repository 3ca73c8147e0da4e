#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "ghrl/service/server.hpp"
#include "ghrl/service/session.hpp"
#include "ghrl/trainer/trainer.hpp"

using namespace ghrl;
using namespace ghrl::service;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

Resources& resources() {
  static Resources r = cached_resources();
  return r;
}

Json tiny(const char* mechanism) {
  return {{"mechanism", mechanism}, {"hidden", 16},        {"depth", 1},         {"aux_hidden", 16},
          {"aux_depth", 1},         {"aux_iterations", 10}, {"epochs", 1},       {"n_steps", 256},
          {"batch", 128},           {"n_inputs", 4},        {"total_steps", 512}, {"evaluate_after", false}};
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ghrl_service_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void wait_for_status(const Session& s, Status want) {
  for (int i = 0; i < 2000 && s.status() != want; ++i) std::this_thread::sleep_for(5ms);
  ASSERT_EQ(to_string(s.status()), std::string(to_string(want)));
}

// Answers every pending query with the simulated oracle's label until the run ends.
void answer_all(Session& s, const std::function<Json(const Json& query)>& make) {
  while (!s.terminal()) {
    const Json pending = s.pending_json();
    for (const Json& q : pending["queries"]) {
      const Json r = s.answer(q["id"].get<std::string>(), make(q));
      EXPECT_TRUE(r["accepted"].get<bool>()) << r.dump();
    }
    std::this_thread::sleep_for(2ms);
  }
}

}  // namespace

TEST(Session, CreateAndLegalTransitions) {
  SessionManager m(resources(), "");
  auto s = m.create(tiny("baseline"));
  EXPECT_EQ(s->status(), Status::kCreated);
  EXPECT_EQ(s->status_json()["status"], "created");
  EXPECT_EQ(s->config().provider, trainer::ProviderKind::kHumanService);
  EXPECT_THROW(s->pause(), Conflict);
  EXPECT_THROW(s->resume(), Conflict);
  EXPECT_THROW(s->eval_json(), Conflict);
  s->start();
  EXPECT_THROW(s->start(), Conflict);
  s->wait();
  EXPECT_EQ(s->status(), Status::kFinished) << s->status_json().dump();
  EXPECT_THROW(s->start(), Conflict);
  EXPECT_THROW(s->pause(), Conflict);
  EXPECT_THROW(m.get("nope"), NotFound);
  EXPECT_THROW(m.create({{"mechanism", "tamer"}}), Invalid);
  EXPECT_THROW(m.create({{"weather", "/no/such/file.csv"}}), Invalid);
  EXPECT_THROW(m.create(Json::array()), Invalid);
}

TEST(Session, AnswerValidation) {
  env::Observation obs;
  obs[env::kTempSetpoint] = 18.0;
  obs[env::kCo2Setpoint] = 800.0;
  const auto fb = oracle::InputKind::kFeedback;
  const auto adv = oracle::InputKind::kAdvice;
  EXPECT_EQ(parse_answer({{"feedback", 1}}, fb, obs).feedback, 1);
  EXPECT_EQ(parse_answer({{"feedback", -1}}, fb, obs).feedback, -1);
  EXPECT_EQ(parse_answer({{"feedback", -1.0}}, fb, obs).feedback, -1);
  EXPECT_THROW(parse_answer({{"feedback", 0}}, fb, obs), Invalid);
  EXPECT_THROW(parse_answer({{"feedback", 0.5}}, fb, obs), Invalid);
  EXPECT_THROW(parse_answer({{"feedback", "good"}}, fb, obs), Invalid);
  EXPECT_THROW(parse_answer({{"advice", {{"d_temp", 2}}}}, fb, obs), Invalid);

  std::vector<double> v(27, 1.0 / 27.0);
  EXPECT_NO_THROW(parse_answer({{"advice", v}}, adv, obs));
  std::vector<double> short_mass(27, 0.0);
  short_mass[3] = 0.99;
  EXPECT_THROW(parse_answer({{"advice", short_mass}}, adv, obs), Invalid);
  short_mass[3] = 1.0 + 5e-10;
  EXPECT_NO_THROW(parse_answer({{"advice", short_mass}}, adv, obs));
  std::vector<double> neg(27, 0.0);
  neg[0] = 1.5;
  neg[1] = -0.5;
  EXPECT_THROW(parse_answer({{"advice", neg}}, adv, obs), Invalid);
  EXPECT_THROW(parse_answer({{"advice", std::vector<double>(26, 1.0 / 26)}}, adv, obs), Invalid);
  EXPECT_THROW(parse_answer({{"feedback", 1}}, adv, obs), Invalid);
  EXPECT_THROW(parse_answer({{"advice", {{"d_tmp", 2}}}}, adv, obs), Invalid);

  // dT = +2, dCO2 = 0: the three vent variants of that action.
  const auto in = parse_answer({{"advice", {{"d_temp", 2}, {"d_co2", 0}}}}, adv, obs);
  int support = 0;
  for (std::size_t a = 0; a < env::kNumActions; ++a) {
    if (in.advice[a] > 0) {
      ++support;
      EXPECT_NEAR(in.advice[a], 1.0 / 3.0, 1e-15);
      const env::Action act{static_cast<int>(a)};
      EXPECT_EQ(act.temp_delta(), 2.0);
      EXPECT_EQ(act.co2_delta(), 0.0);
    }
  }
  EXPECT_EQ(support, 3);
}

TEST(Session, SnapshotFollowsObservationOrder) {
  env::Observation obs;
  for (std::size_t i = 0; i < env::kObsSize; ++i) obs[i] = static_cast<double>(i);
  const Json j = snapshot_json(7, env::to_hour(2021, 1, 1, 5), obs);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  ASSERT_EQ(keys.size(), env::kObsSize + 2);
  EXPECT_EQ(keys[0], "step");
  EXPECT_EQ(keys[1], "time");
  for (std::size_t i = 0; i < env::kObsSize; ++i) {
    EXPECT_EQ(keys[i + 2], env::kObsNames[i]);
    EXPECT_EQ(j[env::kObsNames[i]].get<double>(), static_cast<double>(i));
  }
  EXPECT_EQ(j["time"], "2021-01-01T05:00:00");
}

// Zero deadline with the oracle fallback is the simulated study.
TEST(Session, ZeroDeadlineFallsBackToOracle) {
  const fs::path dir = temp_dir("deadline");
  SessionManager m(resources(), dir);
  Json body = tiny("reward_shaping");
  body["query_deadline_s"] = 0;
  body["fallback"] = "oracle";
  auto s = m.create(body);
  s->start();
  s->wait();
  ASSERT_EQ(s->status(), Status::kFinished) << s->status_json().dump();

  std::istringstream lines(slurp(dir / "s1" / "answers.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(nlohmann::json::parse(line)["source"], "oracle");
    ++n;
  }
  EXPECT_EQ(n, 2 * 4);

  trainer::TrainConfig c = s->config();
  c.provider = trainer::ProviderKind::kSimulated;
  c.output_dir = (dir / "sim").string();
  trainer::Trainer t(c, resources().weather(c.weather), resources().table(""));
  t.run();
  EXPECT_EQ(slurp(dir / "s1" / "metrics.csv"), slurp(dir / "sim" / "metrics.csv"));
  EXPECT_EQ(slurp(dir / "s1" / "aux_loss.csv"), slurp(dir / "sim" / "aux_loss.csv"));
}

TEST(Session, SkipAndEstimateFallbacks) {
  for (const char* fallback : {"skip", "estimate"}) {
    SessionManager m(resources(), "");
    Json body = tiny("policy_shaping_precise");
    body["query_deadline_s"] = 0;
    body["fallback"] = fallback;
    body["output_dir"] = "";
    auto s = m.create(body);
    s->start();
    s->wait();
    ASSERT_EQ(s->status(), Status::kFinished) << s->status_json().dump();
    int resolved = 0;
    for (const Event& e : s->events_after(0, 0ms)) {
      if (e.type != "queries_resolved") continue;
      ++resolved;
      EXPECT_EQ(e.data["human"], 0);
      EXPECT_EQ(e.data["fallback"], 4);
      EXPECT_EQ(e.data["fallback_kind"], fallback);
    }
    EXPECT_EQ(resolved, 2);
  }
}

TEST(Session, HumanAnswersAreConsumedAndReplayable) {
  const fs::path dir = temp_dir("human");
  SessionManager m(resources(), dir);
  Json body = tiny("policy_shaping_precise");
  body["query_deadline_s"] = 60;
  auto s = m.create(body);
  s->start();
  int k = 0;
  answer_all(*s, [&](const Json& q) {
    EXPECT_EQ(q["kind"], "advice");
    EXPECT_FALSE(q.contains("action"));
    return Json{{"advice", {{"d_temp", (k++ % 3 - 1) * 2}, {"d_co2", 200}}}};
  });
  ASSERT_EQ(s->status(), Status::kFinished) << s->status_json().dump();
  EXPECT_EQ(k, 8);
  const std::string answers = slurp(dir / "s1" / "answers.jsonl");
  EXPECT_EQ(answers.find("\"oracle\""), std::string::npos);

  // A late answer to a resolved query is ignored with a notice.
  const Json late = s->answer("q0", {{"advice", {{"d_temp", 0}}}});
  EXPECT_FALSE(late["accepted"].get<bool>());
  EXPECT_TRUE(late.contains("notice"));
  EXPECT_THROW(s->answer("q999", {{"feedback", 1}}), NotFound);

  trainer::TrainConfig c = s->config();
  c.provider = trainer::ProviderKind::kReplay;
  c.replay_file = (dir / "s1" / "answers.jsonl").string();
  c.output_dir = (dir / "replay").string();
  trainer::Trainer t(c, resources().weather(c.weather), resources().table(""));
  t.run();
  EXPECT_EQ(slurp(dir / "s1" / "metrics.csv"), slurp(dir / "replay" / "metrics.csv"));
  EXPECT_EQ(slurp(dir / "s1" / "aux_loss.csv"), slurp(dir / "replay" / "aux_loss.csv"));
}

TEST(Session, FeedbackQueriesShowTheTakenAction) {
  SessionManager m(resources(), "");
  Json body = tiny("control_sharing");
  body["output_dir"] = "";
  auto s = m.create(body);
  s->start();
  wait_for_status(*s, Status::kAwaitingInput);
  const Json pending = s->pending_json();
  ASSERT_EQ(pending["queries"].size(), 4u);
  const Json q = pending["queries"][0];
  EXPECT_EQ(q["kind"], "feedback");
  const int a = q["action"]["index"].get<int>();
  EXPECT_EQ(q["action"]["d_temp"].get<double>(), env::Action{a}.temp_delta());
  EXPECT_EQ(q["context"].size(), env::kObsSize);
  EXPECT_GT(q["deadline_in_s"].get<double>(), 100.0);
  EXPECT_THROW(s->pause(), Conflict);  // only from running
  const std::string id = q["id"];
  EXPECT_THROW(s->answer(id, {{"feedback", 2}}), Invalid);
  EXPECT_TRUE(s->answer(id, {{"feedback", 1}})["accepted"].get<bool>());
  EXPECT_TRUE(s->answer(id, {{"feedback", 1}})["accepted"].get<bool>());  // idempotent
  EXPECT_THROW(s->answer(id, {{"feedback", -1}}), Conflict);
  EXPECT_EQ(s->pending_json()["queries"].size(), 3u);
  EXPECT_EQ(s->status_json()["pending_queries"], 3);
  answer_all(*s, [](const Json&) { return Json{{"feedback", -1}}; });
  EXPECT_EQ(s->status(), Status::kFinished);
}

TEST(Session, PauseResumeKeepsTheRunDeterministic) {
  const fs::path dir = temp_dir("pause");
  SessionManager m(resources(), dir);
  Json body = tiny("policy_shaping_constraint");
  body["provider"] = "simulated";
  body["total_steps"] = 256 * 40;
  body["checkpoint_every"] = 0;
  auto s = m.create(body);
  s->start();
  // Pause somewhere inside the run and check that no step is taken.
  while (s->status_json()["progress"]["step"].get<std::uint64_t>() < 1000) std::this_thread::sleep_for(1ms);
  s->pause();
  std::this_thread::sleep_for(50ms);
  const auto step = s->status_json()["progress"]["step"].get<std::uint64_t>();
  std::this_thread::sleep_for(100ms);
  EXPECT_EQ(s->status_json()["progress"]["step"].get<std::uint64_t>(), step);
  EXPECT_EQ(s->status(), Status::kPaused);
  EXPECT_THROW(s->pause(), Conflict);
  s->resume();
  s->wait();
  ASSERT_EQ(s->status(), Status::kFinished);

  trainer::TrainConfig c = s->config();
  c.output_dir = (dir / "direct").string();
  trainer::Trainer t(c, resources().weather(c.weather), resources().table(""));
  t.run();
  EXPECT_EQ(slurp(dir / "s1" / "metrics.csv"), slurp(dir / "direct" / "metrics.csv"));
}

TEST(Session, EventsAreOrderedAndResumable) {
  SessionManager m(resources(), "", 64);
  Json body = tiny("reward_shaping");
  body["provider"] = "simulated";
  body["output_dir"] = "";
  body["evaluate_after"] = true;
  body["test_first_year"] = 2022;
  body["test_last_year"] = 2022;
  auto s = m.create(body);
  std::vector<Event> before_start = s->events_after(0, 0ms);
  ASSERT_EQ(before_start.size(), 1u);
  EXPECT_EQ(before_start[0].data["status"], "created");
  s->start();
  s->wait();
  const std::vector<Event> all = s->events_after(0, 0ms);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].seq, i + 1);
  int intervals = 0, climate = 0;
  for (const Event& e : all) {
    if (e.type == "interval") {
      ++intervals;
      EXPECT_TRUE(e.data.contains("reward_raw"));
      EXPECT_TRUE(e.data.contains("reward_shaped"));
      EXPECT_TRUE(e.data.contains("beta"));
      EXPECT_TRUE(e.data["aux"].contains("train"));
      EXPECT_EQ(e.data["climate"]["step"], e.data["step"]);
    }
    if (e.type == "climate") ++climate;
  }
  EXPECT_EQ(intervals, 2);
  EXPECT_EQ(climate, 512 / 64);
  EXPECT_EQ(all.back().data["status"], "finished");
  const auto tail = s->events_after(5, 0ms);
  ASSERT_EQ(tail.size(), all.size() - 5);
  EXPECT_EQ(tail.front().seq, 6u);
  const Json report = s->eval_json();
  EXPECT_EQ(report["trajectories"].size(), 2u);  // 2022 jan and dec
  EXPECT_EQ(report["hourly"].size(), 24u);
}

TEST(Server, HttpRoundTrip) {
  ServerOptions opt;
  opt.port = 0;
  opt.runs_dir = temp_dir("http");
  opt.keepalive_ms = 200;
  Server server(opt, resources());
  const int port = server.bind();
  server.start_background();
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(30, 0);

  EXPECT_EQ(cli.Get("/sessions/zzz")->status, 404);
  EXPECT_EQ(cli.Post("/sessions", "{not json", "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/sessions", R"({"beta0": 7})", "application/json")->status, 400);

  Json body = tiny("reward_shaping");
  auto created = cli.Post("/sessions", body.dump(), "application/json");
  ASSERT_EQ(created->status, 201);
  const std::string id = Json::parse(created->body)["id"];
  EXPECT_EQ(Json::parse(cli.Get("/sessions/" + id)->body)["status"], "created");
  EXPECT_EQ(cli.Post("/sessions/" + id + "/pause")->status, 409);
  EXPECT_EQ(cli.Get("/sessions/" + id + "/eval")->status, 409);

  // Subscribe before starting: every event arrives, in order.
  std::vector<std::uint64_t> seqs;
  std::string last_status;
  std::thread stream([&] {
    httplib::Client sc("127.0.0.1", port);
    sc.set_read_timeout(60, 0);
    std::string buffer;
    sc.Get("/sessions/" + id + "/metrics/stream", [&](const char* data, std::size_t len) {
      buffer.append(data, len);
      std::size_t end;
      while ((end = buffer.find("\n\n")) != std::string::npos) {
        const std::string block = buffer.substr(0, end);
        buffer.erase(0, end + 2);
        std::istringstream in(block);
        std::string line, event;
        while (std::getline(in, line)) {
          if (line.rfind("id: ", 0) == 0) seqs.push_back(std::stoull(line.substr(4)));
          if (line.rfind("event: ", 0) == 0) event = line.substr(7);
          if (line.rfind("data: ", 0) == 0 && event == "status") {
            last_status = Json::parse(line.substr(6))["status"];
          }
        }
      }
      return true;
    });
  });

  ASSERT_EQ(cli.Post("/sessions/" + id + "/start")->status, 200);
  EXPECT_EQ(cli.Post("/sessions/" + id + "/start")->status, 409);
  int answered = 0;
  for (int spin = 0; spin < 4000; ++spin) {
    const Json status = Json::parse(cli.Get("/sessions/" + id)->body);
    if (status["status"] == "finished" || status["status"] == "failed") break;
    const Json pending = Json::parse(cli.Get("/sessions/" + id + "/queries")->body);
    for (const Json& q : pending["queries"]) {
      const std::string path = "/sessions/" + id + "/queries/" + q["id"].get<std::string>() + "/answer";
      EXPECT_EQ(cli.Post(path, R"({"feedback": 0.3})", "application/json")->status, 400);
      auto r = cli.Post(path, R"({"feedback": 1})", "application/json");
      ASSERT_EQ(r->status, 200);
      answered += Json::parse(r->body)["accepted"].get<bool>();
    }
    std::this_thread::sleep_for(5ms);
  }
  stream.join();
  EXPECT_EQ(answered, 8);
  EXPECT_EQ(Json::parse(cli.Get("/sessions/" + id)->body)["status"], "finished");
  ASSERT_FALSE(seqs.empty());
  for (std::size_t i = 0; i < seqs.size(); ++i) EXPECT_EQ(seqs[i], i + 1);
  EXPECT_EQ(last_status, "finished");
  EXPECT_EQ(cli.Post("/sessions/" + id + "/queries/q0/answer", R"({"feedback": 1})", "application/json")->status,
            200);

  // Reconnect with Last-Event-ID: only the tail is replayed.
  httplib::Headers h{{"Last-Event-ID", std::to_string(seqs.size() - 2)}};
  auto tail = cli.Get("/sessions/" + id + "/metrics/stream", h);
  ASSERT_EQ(tail->status, 200);
  EXPECT_EQ(tail->body.find("id: " + std::to_string(seqs.size() - 2) + "\n"), std::string::npos);
  EXPECT_NE(tail->body.find("id: " + std::to_string(seqs.size() - 1) + "\n"), std::string::npos);
  EXPECT_NE(tail->body.find("id: " + std::to_string(seqs.size()) + "\n"), std::string::npos);
  server.stop();
}

TEST(Schema, ObservationFieldsMatchTheCode) {
  std::ifstream in(GHRL_TEST_DATA "/../../api/session_api.json");
  ASSERT_TRUE(in);
  const Json schema = Json::parse(in);
  EXPECT_EQ(schema["schema_version"], kSchemaVersion);
  ASSERT_EQ(schema["observation_fields"].size(), env::kObsSize);
  for (std::size_t i = 0; i < env::kObsSize; ++i) EXPECT_EQ(schema["observation_fields"][i], env::kObsNames[i]);
  std::vector<std::string> statuses;
  for (Status s : {Status::kCreated, Status::kRunning, Status::kAwaitingInput, Status::kPaused, Status::kFinished,
                   Status::kFailed}) {
    statuses.push_back(to_string(s));
  }
  EXPECT_EQ(schema["status_values"].get<std::vector<std::string>>(), statuses);
}
