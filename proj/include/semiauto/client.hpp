#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "semiauto/wire.hpp"

namespace semiauto::client {

// The server answered the upgrade request with an HTTP error status.
class HandshakeRefused : public std::runtime_error {
 public:
  explicit HandshakeRefused(int status)
      : std::runtime_error("handshake refused with HTTP " + std::to_string(status)),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Blocking WebSocket client for one session endpoint.
class WireClient {
 public:
  // Connects to ws://host:port/session/<id>/<user|operator>. Throws
  // HandshakeRefused on an HTTP error status.
  WireClient(const std::string& host, std::uint16_t port, const std::string& session_id,
             wire::Endpoint endpoint);
  ~WireClient();

  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  void send(const wire::WireMessage& message);
  // Sends `type` with `body` for this client's session; t_ms is advisory.
  void send(const std::string& type, nlohmann::ordered_json body = nlohmann::ordered_json::object());

  // Next frame, or nullopt once the server has closed the connection or the
  // timeout has passed.
  std::optional<wire::WireMessage> receive(std::chrono::milliseconds timeout);

  void close();

  const std::string& session_id() const { return session_id_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string session_id_;
};

}  // namespace semiauto::client
