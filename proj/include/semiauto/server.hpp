#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "semiauto/config.hpp"

namespace semiauto::server {

struct ServerOptions {
  Config config;
  std::string address = "127.0.0.1";
  // 0 picks an ephemeral port; see SessionServer::port().
  std::uint16_t port = 0;
  std::filesystem::path log_dir = "logs";
};

// WebSocket front end. Each session has two endpoints,
// /session/<id>/user and /session/<id>/operator, with at most one
// connection each. The first connection creates the session and starts its
// clock; a user session_end or user disconnect ends it. Every engine event
// is appended to <log_dir>/<id>.jsonl and flushed as it happens. An id whose
// log already exists is refused with 409, as is a second connection to an
// occupied endpoint.
//
// All sessions share one io_context driven by run(); each session's work is
// serialized on it.
class SessionServer {
 public:
  explicit SessionServer(ServerOptions options);
  ~SessionServer();

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds and listens. Throws on bind failure.
  void start();
  std::uint16_t port() const;

  // Blocks until stop().
  void run();
  // Safe to call from any thread.
  void stop();

  // Called on the loop thread after a session's log is closed.
  void on_session_closed(std::function<void(const std::string&)> callback);

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace semiauto::server
