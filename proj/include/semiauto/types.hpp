#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace semiauto {

using Millis = std::int64_t;

enum class ResponseKind {
  kAssessment,
  kElaboratingQuestion,
  kRepeatedResponse,
  kFormulaic,
  kBackchannelFormal,
  kBackchannelReactive,
  kSilencePrompt,
  kOperatorSpeech,
};

// The four kinds that answer a user turn. Only these enter the takeover
// windows.
constexpr bool is_turn_response(ResponseKind kind) {
  return kind == ResponseKind::kAssessment ||
         kind == ResponseKind::kElaboratingQuestion ||
         kind == ResponseKind::kRepeatedResponse ||
         kind == ResponseKind::kFormulaic;
}

constexpr bool is_backchannel(ResponseKind kind) {
  return kind == ResponseKind::kBackchannelFormal ||
         kind == ResponseKind::kBackchannelReactive;
}

// Selection rank of a turn response; lower wins.
constexpr int hierarchy_rank(ResponseKind kind) {
  switch (kind) {
    case ResponseKind::kAssessment: return 0;
    case ResponseKind::kElaboratingQuestion: return 1;
    case ResponseKind::kRepeatedResponse: return 2;
    case ResponseKind::kFormulaic: return 3;
    default: return -1;
  }
}

enum class Expression { kHappy, kSad, kAnger, kSurprise, kLaughter };

inline constexpr std::array<Expression, 5> kAllExpressions = {
    Expression::kHappy, Expression::kSad, Expression::kAnger,
    Expression::kSurprise, Expression::kLaughter};

enum class Polarity { kPositive, kNegative };

// Declaration order is display priority.
enum class TakeoverCondition {
  kLongSilence,
  kShortTurns,
  kConsecutiveFormulaic,
  kNoSentimentOrQuestion,
};

inline constexpr std::array<TakeoverCondition, 4> kAllConditions = {
    TakeoverCondition::kLongSilence, TakeoverCondition::kShortTurns,
    TakeoverCondition::kConsecutiveFormulaic,
    TakeoverCondition::kNoSentimentOrQuestion};

enum class ControlMode { kAgent, kOperator };

enum class Actor { kUser, kAgent, kOperator, kSystem };

enum class EventKind {
  kUtterance,
  kResponse,
  kBackchannel,
  kSilenceTick,
  kEndOfTurn,
  kTakeoverPrompt,
  kControlChange,
  kExpression,
  kSessionStart,
  kSessionEnd,
};

std::string_view to_string(ResponseKind v);
std::string_view to_string(Expression v);
std::string_view to_string(Polarity v);
std::string_view to_string(TakeoverCondition v);
std::string_view to_string(ControlMode v);
std::string_view to_string(Actor v);
std::string_view to_string(EventKind v);

// Inverse of to_string; nullopt on unknown names.
std::optional<ResponseKind> parse_response_kind(std::string_view s);
std::optional<Expression> parse_expression(std::string_view s);
std::optional<Polarity> parse_polarity(std::string_view s);
std::optional<TakeoverCondition> parse_condition(std::string_view s);
std::optional<ControlMode> parse_control_mode(std::string_view s);
std::optional<Actor> parse_actor(std::string_view s);
std::optional<EventKind> parse_event_kind(std::string_view s);

}  // namespace semiauto
