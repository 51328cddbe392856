#include "semiauto/types.hpp"

#include <utility>

#include "semiauto/error.hpp"

namespace semiauto {
namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<ResponseKind, 8> kResponseKindNames = {{
    {ResponseKind::kAssessment, "assessment"},
    {ResponseKind::kElaboratingQuestion, "elaborating_question"},
    {ResponseKind::kRepeatedResponse, "repeated_response"},
    {ResponseKind::kFormulaic, "formulaic"},
    {ResponseKind::kBackchannelFormal, "backchannel_formal"},
    {ResponseKind::kBackchannelReactive, "backchannel_reactive"},
    {ResponseKind::kSilencePrompt, "silence_prompt"},
    {ResponseKind::kOperatorSpeech, "operator_speech"},
}};

constexpr NameTable<Expression, 5> kExpressionNames = {{
    {Expression::kHappy, "happy"},
    {Expression::kSad, "sad"},
    {Expression::kAnger, "anger"},
    {Expression::kSurprise, "surprise"},
    {Expression::kLaughter, "laughter"},
}};

constexpr NameTable<Polarity, 2> kPolarityNames = {{
    {Polarity::kPositive, "positive"},
    {Polarity::kNegative, "negative"},
}};

constexpr NameTable<TakeoverCondition, 4> kConditionNames = {{
    {TakeoverCondition::kLongSilence, "long_silence"},
    {TakeoverCondition::kShortTurns, "short_turns"},
    {TakeoverCondition::kConsecutiveFormulaic, "consecutive_formulaic"},
    {TakeoverCondition::kNoSentimentOrQuestion, "no_sentiment_or_question"},
}};

constexpr NameTable<ControlMode, 2> kControlModeNames = {{
    {ControlMode::kAgent, "agent"},
    {ControlMode::kOperator, "operator"},
}};

constexpr NameTable<Actor, 4> kActorNames = {{
    {Actor::kUser, "user"},
    {Actor::kAgent, "agent"},
    {Actor::kOperator, "operator"},
    {Actor::kSystem, "system"},
}};

constexpr NameTable<EventKind, 10> kEventKindNames = {{
    {EventKind::kUtterance, "utterance"},
    {EventKind::kResponse, "response"},
    {EventKind::kBackchannel, "backchannel"},
    {EventKind::kSilenceTick, "silence_tick"},
    {EventKind::kEndOfTurn, "end_of_turn"},
    {EventKind::kTakeoverPrompt, "takeover_prompt"},
    {EventKind::kControlChange, "control_change"},
    {EventKind::kExpression, "expression"},
    {EventKind::kSessionStart, "session_start"},
    {EventKind::kSessionEnd, "session_end"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const NameTable<E, N>& table, std::string_view s) {
  for (const auto& [v, name] : table) {
    if (name == s) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ResponseKind v) { return name_of(kResponseKindNames, v); }
std::string_view to_string(Expression v) { return name_of(kExpressionNames, v); }
std::string_view to_string(Polarity v) { return name_of(kPolarityNames, v); }
std::string_view to_string(TakeoverCondition v) { return name_of(kConditionNames, v); }
std::string_view to_string(ControlMode v) { return name_of(kControlModeNames, v); }
std::string_view to_string(Actor v) { return name_of(kActorNames, v); }
std::string_view to_string(EventKind v) { return name_of(kEventKindNames, v); }

std::optional<ResponseKind> parse_response_kind(std::string_view s) {
  return value_of(kResponseKindNames, s);
}
std::optional<Expression> parse_expression(std::string_view s) {
  return value_of(kExpressionNames, s);
}
std::optional<Polarity> parse_polarity(std::string_view s) {
  return value_of(kPolarityNames, s);
}
std::optional<TakeoverCondition> parse_condition(std::string_view s) {
  return value_of(kConditionNames, s);
}
std::optional<ControlMode> parse_control_mode(std::string_view s) {
  return value_of(kControlModeNames, s);
}
std::optional<Actor> parse_actor(std::string_view s) {
  return value_of(kActorNames, s);
}
std::optional<EventKind> parse_event_kind(std::string_view s) {
  return value_of(kEventKindNames, s);
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedInput: return "malformed_input";
    case ErrorCode::kNotInControl: return "not_in_control";
    case ErrorCode::kAuthorization: return "authorization";
    case ErrorCode::kOrdering: return "ordering";
    case ErrorCode::kCorruptLog: return "corrupt_log";
    case ErrorCode::kScript: return "script_error";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kIncompleteRecord: return "incomplete_record";
    case ErrorCode::kUndefinedCorrelation: return "undefined_correlation";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kJoin: return "join";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kNoSuchSession: return "no_such_session";
    case ErrorCode::kSchema: return "schema";
  }
  return "unknown";
}

}  // namespace semiauto
