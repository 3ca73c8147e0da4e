#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "ghrl/service/session.hpp"

namespace httplib {
class Server;
}

namespace ghrl::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0: any free port
  std::filesystem::path runs_dir = "runs";
  int climate_every = 24;  // steps between climate events on the stream
  int keepalive_ms = 15000;
};

// HTTP front end: JSON bodies, server-sent events for the metrics stream.
class Server {
 public:
  Server(ServerOptions options, Resources resources);
  ~Server();

  // Binds the socket and returns the port.
  int bind();
  // Serves until stop(); bind() first.
  void serve();
  void start_background();
  void stop();

  SessionManager& sessions() { return manager_; }

 private:
  void routes();

  ServerOptions options_;
  SessionManager manager_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
};

}  // namespace ghrl::service
