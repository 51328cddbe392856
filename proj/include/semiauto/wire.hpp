#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "semiauto/config.hpp"
#include "semiauto/session.hpp"

namespace semiauto::wire {

// One JSON text frame: {"type":..,"session_id":..,"t_ms":..,"body":{..}}.
struct WireMessage {
  std::string type;
  std::string session_id;
  Millis t_ms = 0;
  nlohmann::ordered_json body = nlohmann::ordered_json::object();

  bool operator==(const WireMessage&) const = default;
};

inline constexpr std::string_view kMessageTypes[] = {
    "user_utterance", "end_of_turn", "agent_response", "backchannel",
    "silence_update", "takeover_prompt", "control_change", "operator_utterance",
    "expression", "session_start", "session_end", "error"};

bool is_known_type(std::string_view type);

std::string encode(const WireMessage& message);
// Throws Error(kSchema) on malformed frames or unknown types.
WireMessage decode(std::string_view text);

enum class Endpoint { kUser, kOperator };
enum class Recipient { kUser, kOperator, kBoth };

std::string_view to_string(Endpoint e);

struct Outbound {
  Recipient to = Recipient::kBoth;
  WireMessage message;

  bool reaches(Endpoint e) const {
    return to == Recipient::kBoth || (to == Recipient::kUser) == (e == Endpoint::kUser);
  }
};

WireMessage make_error(const std::string& session_id, Millis t_ms, std::string_view code,
                       const std::string& message);

// Protocol front of one session: turns inbound frames into engine input
// events and engine output events into per-client frames. Not thread-safe;
// the owning event loop serializes all calls.
class SessionChannel {
 public:
  SessionChannel(std::string session_id, Config config);

  std::vector<Outbound> open(Millis now);

  // Errors come back as a single `error` frame addressed to the sender:
  // schema violations (`schema`), operator speech without control
  // (`not_in_control`), frames for another session (`no_such_session`).
  std::vector<Outbound> handle_inbound(Endpoint from, const WireMessage& message, Millis now);

  // Emits silence_update and whatever the engine produces at `now`; reverts
  // control once an absent operator's grace period has run out.
  std::vector<Outbound> tick(Millis now);

  std::vector<Outbound> close(Millis now);

  void operator_disconnected(Millis now);
  void operator_connected();

  const SessionEngine& engine() const { return engine_; }
  SessionEngine& engine() { return engine_; }
  const std::string& session_id() const { return session_id_; }
  bool ended() const { return engine_.state().ended; }

  std::vector<Outbound> translate(const std::vector<SessionEvent>& events,
                                  std::optional<Millis> silence_ms = std::nullopt) const;

 private:
  Millis clamp(Millis now) const;

  std::string session_id_;
  SessionEngine engine_;
  std::optional<Millis> operator_absent_since_;
};

}  // namespace semiauto::wire
