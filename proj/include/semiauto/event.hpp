#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "semiauto/dialogue.hpp"
#include "semiauto/types.hpp"

namespace semiauto {

struct Config;

struct EmptyPayload {
  bool operator==(const EmptyPayload&) const = default;
};

// User speech, stamped at its end time.
struct UtterancePayload {
  std::string text;
  Millis start_ms = 0;
  std::vector<Annotation> annotations;

  bool operator==(const UtterancePayload&) const = default;
};

// Agent or operator output. duration_ms is set on operator speech only.
// audio_ref is reserved for a future audio path and is carried verbatim.
struct ResponsePayload {
  ResponseKind kind = ResponseKind::kFormulaic;
  std::string text;
  bool has_sentiment = false;
  std::optional<Expression> expression;
  std::optional<Millis> duration_ms;
  std::optional<std::string> audio_ref;

  bool operator==(const ResponsePayload&) const = default;
};

struct PromptPayload {
  std::vector<TakeoverCondition> reasons;

  bool operator==(const PromptPayload&) const = default;
};

// target is the mode after the toggle. cause is empty for a click and names
// the reason for server-initiated toggles.
struct ControlPayload {
  ControlMode target = ControlMode::kOperator;
  std::string cause;

  bool operator==(const ControlPayload&) const = default;
};

struct ExpressionPayload {
  Expression expression = Expression::kHappy;

  bool operator==(const ExpressionPayload&) const = default;
};

// First record of every log: the full configuration snapshot.
struct StartPayload {
  std::string session_id;
  std::shared_ptr<const Config> config;

  // Compares configurations by value.
  bool operator==(const StartPayload& other) const;
};

using Payload = std::variant<EmptyPayload, UtterancePayload, ResponsePayload, PromptPayload,
                             ControlPayload, ExpressionPayload, StartPayload>;

struct SessionEvent {
  std::uint64_t seq = 0;
  Millis t_ms = 0;
  Actor actor = Actor::kSystem;
  EventKind kind = EventKind::kSilenceTick;
  Payload payload;

  bool operator==(const SessionEvent&) const = default;

  template <typename T>
  const T& as() const {
    return std::get<T>(payload);
  }

  // Rebuilds the user utterance carried by a user Utterance event.
  UserUtterance utterance() const;
  AgentResponse response() const;
};

// Convenience constructors for input events. seq is assigned on append.
namespace events {
SessionEvent session_start(Millis t, const std::string& session_id, const Config& config);
SessionEvent session_end(Millis t);
SessionEvent tick(Millis t);
SessionEvent user_utterance(Millis t, const UserUtterance& u);
SessionEvent end_of_turn(Millis t);
SessionEvent operator_toggle(Millis t, std::string cause = {});
SessionEvent operator_speech(Millis t, std::string text, std::optional<Expression> expression,
                             Millis duration_ms);
SessionEvent operator_expression(Millis t, Expression e);
}  // namespace events

// Annotation JSON shape shared by logs, scripts and the wire protocol:
// {"kind":"focus_word"|"sentiment","value":..,"confidence":..,"category"?:..}.
// Decoding throws Error(kCorruptLog).
nlohmann::ordered_json annotation_to_json(const Annotation& a);
Annotation annotation_from_json(const nlohmann::json& j);

// One JSON Lines record with keys seq, t_ms, actor, kind, payload in that
// order. The encoding is canonical, so encode(decode(line)) == line for any
// line this function produced.
std::string encode_event(const SessionEvent& event);

// Throws Error(kCorruptLog) on malformed records.
SessionEvent decode_event(const std::string& line);

}  // namespace semiauto
