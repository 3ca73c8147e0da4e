#include "ghrl/service/server.hpp"

#include <httplib.h>

#include "ghrl/errors.hpp"

namespace ghrl::service {

namespace {

void send(httplib::Response& res, int code, const Json& body) {
  res.status = code;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int code, const std::string& message) {
  send(res, code, {{"error", message}, {"code", code}});
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const NotFound& e) {
    fail(res, 404, e.what());
  } catch (const Conflict& e) {
    fail(res, 409, e.what());
  } catch (const Invalid& e) {
    fail(res, 400, e.what());
  } catch (const std::exception& e) {
    fail(res, 500, e.what());
  }
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw Invalid(std::string("body is not valid JSON: ") + e.what());
  }
}

std::string format_event(const Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
}

}  // namespace

Server::Server(ServerOptions options, Resources resources)
    : options_(std::move(options)),
      manager_(std::move(resources), options_.runs_dir, options_.climate_every),
      http_(std::make_unique<httplib::Server>()) {
  routes();
}

Server::~Server() {
  stop();
  manager_.shutdown();
}

void Server::routes() {
  httplib::Server& s = *http_;

  s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"ok", true}, {"schema_version", kSchemaVersion}});
  });

  s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 201, manager_.create(parse_body(req))->status_json()); });
  });

  s.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      Json list = Json::array();
      for (const auto& session : manager_.list()) {
        list.push_back({{"id", session->id()}, {"status", to_string(session->status())}});
      }
      send(res, 200, {{"sessions", list}});
    });
  });

  s.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, manager_.get(req.matches[1])->status_json()); });
  });

  s.Post(R"(/sessions/([^/]+)/(start|pause|resume))", [this](const httplib::Request& req,
                                                              httplib::Response& res) {
    guarded(res, [&] {
      const auto session = manager_.get(req.matches[1]);
      const std::string op = req.matches[2];
      if (op == "start") {
        session->start();
      } else if (op == "pause") {
        session->pause();
      } else {
        session->resume();
      }
      send(res, 200, session->status_json());
    });
  });

  s.Get(R"(/sessions/([^/]+)/queries)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, manager_.get(req.matches[1])->pending_json()); });
  });

  s.Post(R"(/sessions/([^/]+)/queries/([^/]+)/answer)", [this](const httplib::Request& req,
                                                                httplib::Response& res) {
    guarded(res, [&] {
      const auto session = manager_.get(req.matches[1]);
      send(res, 200, session->answer(req.matches[2], parse_body(req)));
    });
  });

  s.Get(R"(/sessions/([^/]+)/eval)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, manager_.get(req.matches[1])->eval_json()); });
  });

  s.Get(R"(/sessions/([^/]+)/metrics/stream)", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
    guarded(res, [&] {
      std::shared_ptr<Session> session = manager_.get(req.matches[1]);
      std::uint64_t after = 0;
      try {
        if (req.has_header("Last-Event-ID")) after = std::stoull(req.get_header_value("Last-Event-ID"));
        if (req.has_param("since")) after = std::stoull(req.get_param_value("since"));
      } catch (const std::exception&) {
        throw Invalid("Last-Event-ID / since must be a sequence number");
      }
      const auto keepalive = std::chrono::milliseconds(options_.keepalive_ms);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [session, after, keepalive](std::size_t, httplib::DataSink& sink) mutable {
            const std::vector<Event> events = session->events_after(after, keepalive);
            for (const Event& e : events) {
              const std::string msg = format_event(e);
              if (!sink.write(msg.data(), msg.size())) return false;
              after = e.seq;
            }
            if (events.empty()) {
              if (session->terminal() && after >= session->last_seq()) {
                sink.done();
                return true;
              }
              static const std::string ping = ": keepalive\n\n";
              if (!sink.write(ping.data(), ping.size())) return false;
            }
            return true;
          });
    });
  });
}

int Server::bind() {
  if (options_.port == 0) {
    const int port = http_->bind_to_any_port(options_.host);
    if (port < 0) throw DataError("cannot bind " + options_.host);
    options_.port = port;
    return port;
  }
  if (!http_->bind_to_port(options_.host, options_.port)) {
    throw DataError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  return options_.port;
}

void Server::serve() { http_->listen_after_bind(); }

void Server::start_background() {
  thread_ = std::thread([this] { serve(); });
  http_->wait_until_ready();
}

void Server::stop() {
  manager_.shutdown();
  http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace ghrl::service
