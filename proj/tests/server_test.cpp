#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

#include "doctest.h"
#include "semiauto/client.hpp"
#include "semiauto/server.hpp"
#include "semiauto/session.hpp"

using namespace semiauto;
using namespace std::chrono_literals;
using client::HandshakeRefused;
using client::WireClient;
using wire::Endpoint;
using wire::WireMessage;

namespace {

// Server on an ephemeral port, run on its own thread, logging to a fresh
// temporary directory.
class LiveServer {
 public:
  explicit LiveServer(Config config = Config{}) {
    dir_ = std::filesystem::temp_directory_path() /
           ("semiauto_server_test_" + std::to_string(::getpid()) + "_" + std::to_string(count_++));
    std::filesystem::remove_all(dir_);
    server_ = std::make_unique<server::SessionServer>(
        server::ServerOptions{std::move(config), "127.0.0.1", 0, dir_});
    server_->on_session_closed([this](const std::string& id) {
      std::lock_guard lock(mu_);
      closed_.insert(id);
      cv_.notify_all();
    });
    server_->start();
    thread_ = std::thread([this] { server_->run(); });
  }
  ~LiveServer() {
    server_->stop();
    thread_.join();
    std::filesystem::remove_all(dir_);
  }

  std::uint16_t port() const { return server_->port(); }
  std::filesystem::path log_path(const std::string& id) const { return dir_ / (id + ".jsonl"); }

  bool wait_closed(const std::string& id, std::chrono::milliseconds timeout = 5s) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return closed_.count(id) > 0; });
  }

 private:
  static inline int count_ = 0;
  std::filesystem::path dir_;
  std::unique_ptr<server::SessionServer> server_;
  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::set<std::string> closed_;
};

// Reads frames until one of `type` arrives; everything read is appended to
// `seen`.
std::optional<WireMessage> await(WireClient& c, const std::string& type,
                                 std::vector<WireMessage>* seen = nullptr,
                                 std::chrono::milliseconds timeout = 5s) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    auto m = c.receive(std::max(left, 1ms));
    if (!m) return std::nullopt;
    if (seen) seen->push_back(*m);
    if (m->type == type) return m;
  }
  return std::nullopt;
}

int refused_status(std::uint16_t port, const std::string& id, Endpoint e) {
  try {
    WireClient c("127.0.0.1", port, id, e);
  } catch (const HandshakeRefused& r) {
    return r.status();
  }
  return 0;
}

}  // namespace

TEST_CASE("a user turn flows to both endpoints and the log replays") {
  LiveServer server;
  WireClient user("127.0.0.1", server.port(), "flow", Endpoint::kUser);
  auto hello = await(user, "session_start");
  REQUIRE(hello);
  CHECK(hello->body.at("mode") == "agent");
  CHECK(hello->body.at("tick_ms") == 250);

  WireClient op("127.0.0.1", server.port(), "flow", Endpoint::kOperator);
  REQUIRE(await(op, "session_start"));

  nlohmann::ordered_json body;
  body["text"] = "I went for a really fun trip";
  body["annotations"] = nlohmann::ordered_json::array(
      {{{"kind", "sentiment"}, {"value", "positive"}, {"confidence", 0.9}}});
  user.send("user_utterance", body);
  user.send("end_of_turn");

  std::vector<WireMessage> op_seen;
  auto answer = await(op, "agent_response", &op_seen);
  REQUIRE(answer);
  CHECK(answer->body.at("kind") == "assessment");
  bool echoed = false;
  for (const auto& m : op_seen) echoed = echoed || m.type == "user_utterance";
  CHECK(echoed);

  std::vector<WireMessage> user_seen;
  auto user_answer = await(user, "agent_response", &user_seen);
  REQUIRE(user_answer);
  CHECK(user_answer->body.at("text") == answer->body.at("text"));
  for (const auto& m : user_seen) {
    CHECK(m.type != "user_utterance");
    CHECK(m.type != "silence_update");
  }

  user.send("session_end");
  CHECK(await(op, "session_end"));
  REQUIRE(server.wait_closed("flow"));
  const auto log = read_log_file(server.log_path("flow"));
  const auto replayed = append_and_replay(log);
  CHECK(replayed.log == log);
  CHECK(replayed.state.ended);
}

TEST_CASE("handshake refusals") {
  LiveServer server;
  WireClient user("127.0.0.1", server.port(), "busy", Endpoint::kUser);
  REQUIRE(await(user, "session_start"));
  CHECK(refused_status(server.port(), "busy", Endpoint::kUser) == 409);
  CHECK(refused_status(server.port(), "bad$id", Endpoint::kUser) == 404);

  user.send("session_end");
  REQUIRE(server.wait_closed("busy"));
  // The log exists now, so the id cannot be reused.
  CHECK(refused_status(server.port(), "busy", Endpoint::kUser) == 409);
}

TEST_CASE("errors go back to the sender only") {
  LiveServer server;
  WireClient user("127.0.0.1", server.port(), "errs", Endpoint::kUser);
  WireClient op("127.0.0.1", server.port(), "errs", Endpoint::kOperator);
  REQUIRE(await(user, "session_start"));
  REQUIRE(await(op, "session_start"));

  user.send("control_change");
  auto err = await(user, "error");
  REQUIRE(err);
  CHECK(err->body.at("code") == "schema");

  op.send("operator_utterance", {{"text", "hello"}});
  err = await(op, "error");
  REQUIRE(err);
  CHECK(err->body.at("code") == "not_in_control");

  op.send("control_change");
  auto change = await(user, "control_change");
  REQUIRE(change);
  CHECK(change->body.at("mode") == "operator");
  user.send("session_end");
  REQUIRE(server.wait_closed("errs"));
}

TEST_CASE("silence reaches the operator as updates and a prompt") {
  Config config;
  config.detector.silence_takeover_ms = 1000;
  config.dialogue.silence_prompt_ms = 60000;
  LiveServer server(config);
  WireClient user("127.0.0.1", server.port(), "quiet", Endpoint::kUser);
  WireClient op("127.0.0.1", server.port(), "quiet", Endpoint::kOperator);
  std::vector<WireMessage> op_seen;
  auto prompt = await(op, "takeover_prompt", &op_seen, 4s);
  REQUIRE(prompt);
  CHECK(prompt->body.at("reasons")[0].at("code") == "long_silence");
  int updates = 0;
  for (const auto& m : op_seen) updates += m.type == "silence_update";
  CHECK(updates >= 2);

  user.send("session_end");
  std::vector<WireMessage> user_seen;
  CHECK(await(user, "session_end", &user_seen));
  for (const auto& m : user_seen) {
    CHECK(m.type != "takeover_prompt");
    CHECK(m.type != "silence_update");
  }
  REQUIRE(server.wait_closed("quiet"));
  const auto log = read_log_file(server.log_path("quiet"));
  CHECK(append_and_replay(log).log == log);
}

TEST_CASE("control reverts to the agent after the operator drops") {
  Config config;
  config.server.operator_grace_ms = 500;
  LiveServer server(config);
  WireClient user("127.0.0.1", server.port(), "drop", Endpoint::kUser);
  {
    WireClient op("127.0.0.1", server.port(), "drop", Endpoint::kOperator);
    op.send("control_change");
    auto taken = await(user, "control_change");
    REQUIRE(taken);
    CHECK(taken->body.at("mode") == "operator");
    op.close();
  }
  auto reverted = await(user, "control_change", nullptr, 3s);
  REQUIRE(reverted);
  CHECK(reverted->body.at("mode") == "agent");
  CHECK(reverted->body.at("cause") == "operator_disconnect");

  // The endpoint is free again.
  WireClient again("127.0.0.1", server.port(), "drop", Endpoint::kOperator);
  auto hello = await(again, "session_start");
  REQUIRE(hello);
  CHECK(hello->body.at("mode") == "agent");
  user.close();
  REQUIRE(server.wait_closed("drop"));
  const auto log = read_log_file(server.log_path("drop"));
  CHECK(append_and_replay(log).log == log);
}

TEST_CASE("sessions run side by side") {
  LiveServer server;
  std::vector<std::unique_ptr<WireClient>> users;
  for (int i = 0; i < 8; ++i) {
    users.push_back(std::make_unique<WireClient>("127.0.0.1", server.port(),
                                                 "multi" + std::to_string(i), Endpoint::kUser));
  }
  for (auto& u : users) u->send("user_utterance", {{"text", "hello there, how are you"}});
  for (auto& u : users) u->send("end_of_turn");
  for (auto& u : users) CHECK(await(*u, "agent_response"));
  for (auto& u : users) u->send("session_end");
  for (int i = 0; i < 8; ++i) {
    REQUIRE(server.wait_closed("multi" + std::to_string(i)));
    const auto log = read_log_file(server.log_path("multi" + std::to_string(i)));
    CHECK(log.session_id == "multi" + std::to_string(i));
  }
}
