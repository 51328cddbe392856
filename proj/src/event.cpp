#include "semiauto/event.hpp"

#include <set>

#include "json.hpp"
#include "semiauto/config.hpp"
#include "semiauto/error.hpp"

namespace semiauto {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorCode::kCorruptLog, why); }

template <typename Parsed>
Parsed parse_name(const json& v, std::optional<Parsed> (*parse)(std::string_view),
                  const char* what) {
  if (!v.is_string()) corrupt(std::string(what) + " must be a string");
  auto parsed = parse(v.get<std::string>());
  if (!parsed) corrupt(std::string("unknown ") + what + " '" + v.get<std::string>() + "'");
  return *parsed;
}

void only_keys(const json& obj, const std::set<std::string>& allowed, const char* where) {
  if (!obj.is_object()) corrupt(std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) corrupt(std::string("unexpected key '") + key + "' in " + where);
  }
}

const json& need(const json& obj, const char* key) {
  if (!obj.contains(key)) corrupt(std::string("missing key '") + key + "'");
  return obj.at(key);
}

template <typename T>
T get(const json& obj, const char* key) {
  try {
    return need(obj, key).get<T>();
  } catch (const json::exception&) {
    corrupt(std::string("bad value for '") + key + "'");
  }
}

}  // namespace

ordered_json annotation_to_json(const Annotation& a) {
  ordered_json j;
  j["kind"] = a.kind == AnnotationKind::kFocusWord ? "focus_word" : "sentiment";
  j["value"] = a.value;
  j["confidence"] = a.confidence;
  if (a.category) j["category"] = *a.category;
  return j;
}

Annotation annotation_from_json(const json& j) {
  only_keys(j, {"kind", "value", "confidence", "category"}, "annotation");
  Annotation a;
  auto kind = get<std::string>(j, "kind");
  if (kind == "focus_word") {
    a.kind = AnnotationKind::kFocusWord;
  } else if (kind == "sentiment") {
    a.kind = AnnotationKind::kSentiment;
  } else {
    corrupt("unknown annotation kind '" + kind + "'");
  }
  a.value = get<std::string>(j, "value");
  a.confidence = get<double>(j, "confidence");
  if (j.contains("category")) a.category = get<std::string>(j, "category");
  return a;
}

namespace {

struct PayloadEncoder {
  ordered_json operator()(const EmptyPayload&) const { return ordered_json::object(); }

  ordered_json operator()(const UtterancePayload& p) const {
    ordered_json j;
    j["text"] = p.text;
    j["start_ms"] = p.start_ms;
    j["annotations"] = ordered_json::array();
    for (const auto& a : p.annotations) j["annotations"].push_back(annotation_to_json(a));
    return j;
  }

  ordered_json operator()(const ResponsePayload& p) const {
    ordered_json j;
    j["kind"] = to_string(p.kind);
    j["text"] = p.text;
    j["has_sentiment"] = p.has_sentiment;
    if (p.expression) j["expression"] = to_string(*p.expression);
    if (p.duration_ms) j["duration_ms"] = *p.duration_ms;
    if (p.audio_ref) j["audio_ref"] = *p.audio_ref;
    return j;
  }

  ordered_json operator()(const PromptPayload& p) const {
    ordered_json reasons = ordered_json::array();
    for (auto r : p.reasons) reasons.push_back(to_string(r));
    return {{"reasons", reasons}};
  }

  ordered_json operator()(const ControlPayload& p) const {
    ordered_json j;
    j["target"] = to_string(p.target);
    if (!p.cause.empty()) j["cause"] = p.cause;
    return j;
  }

  ordered_json operator()(const ExpressionPayload& p) const {
    return {{"expression", to_string(p.expression)}};
  }

  ordered_json operator()(const StartPayload& p) const {
    ordered_json j;
    j["session_id"] = p.session_id;
    j["config"] = p.config ? config_to_json(*p.config) : ordered_json::object();
    return j;
  }
};

Payload decode_payload(EventKind kind, const json& j) {
  switch (kind) {
    case EventKind::kUtterance: {
      only_keys(j, {"text", "start_ms", "annotations"}, "utterance payload");
      UtterancePayload p;
      p.text = get<std::string>(j, "text");
      p.start_ms = get<Millis>(j, "start_ms");
      const auto& list = need(j, "annotations");
      if (!list.is_array()) corrupt("annotations must be a list");
      for (const auto& a : list) p.annotations.push_back(annotation_from_json(a));
      return p;
    }
    case EventKind::kResponse:
    case EventKind::kBackchannel: {
      only_keys(j, {"kind", "text", "has_sentiment", "expression", "duration_ms", "audio_ref"},
                "response payload");
      ResponsePayload p;
      p.kind = parse_name(need(j, "kind"), parse_response_kind, "response kind");
      p.text = get<std::string>(j, "text");
      p.has_sentiment = get<bool>(j, "has_sentiment");
      if (j.contains("expression")) {
        p.expression = parse_name(j.at("expression"), parse_expression, "expression");
      }
      if (j.contains("duration_ms")) p.duration_ms = get<Millis>(j, "duration_ms");
      if (j.contains("audio_ref")) p.audio_ref = get<std::string>(j, "audio_ref");
      return p;
    }
    case EventKind::kTakeoverPrompt: {
      only_keys(j, {"reasons"}, "takeover_prompt payload");
      PromptPayload p;
      const auto& list = need(j, "reasons");
      if (!list.is_array()) corrupt("reasons must be a list");
      for (const auto& r : list) p.reasons.push_back(parse_name(r, parse_condition, "condition"));
      return p;
    }
    case EventKind::kControlChange: {
      only_keys(j, {"target", "cause"}, "control_change payload");
      ControlPayload p;
      p.target = parse_name(need(j, "target"), parse_control_mode, "control mode");
      if (j.contains("cause")) p.cause = get<std::string>(j, "cause");
      return p;
    }
    case EventKind::kExpression: {
      only_keys(j, {"expression"}, "expression payload");
      return ExpressionPayload{parse_name(need(j, "expression"), parse_expression, "expression")};
    }
    case EventKind::kSessionStart: {
      only_keys(j, {"session_id", "config"}, "session_start payload");
      StartPayload p;
      p.session_id = get<std::string>(j, "session_id");
      try {
        p.config = std::make_shared<const Config>(config_from_json(need(j, "config")));
      } catch (const Error& e) {
        corrupt(std::string("config snapshot: ") + e.what());
      }
      return p;
    }
    case EventKind::kSilenceTick:
    case EventKind::kEndOfTurn:
    case EventKind::kSessionEnd:
      only_keys(j, {}, "payload");
      return EmptyPayload{};
  }
  corrupt("unhandled event kind");
}

}  // namespace

bool StartPayload::operator==(const StartPayload& other) const {
  if (session_id != other.session_id) return false;
  if (!config || !other.config) return config == other.config;
  return *config == *other.config;
}

UserUtterance SessionEvent::utterance() const {
  const auto& p = as<UtterancePayload>();
  return UserUtterance{p.start_ms, t_ms, p.text, p.annotations};
}

AgentResponse SessionEvent::response() const {
  const auto& p = as<ResponsePayload>();
  return AgentResponse{t_ms, p.kind, p.text, p.has_sentiment, p.expression};
}

namespace events {

SessionEvent session_start(Millis t, const std::string& session_id, const Config& config) {
  return {0, t, Actor::kSystem, EventKind::kSessionStart,
          StartPayload{session_id, std::make_shared<const Config>(config)}};
}

SessionEvent session_end(Millis t) {
  return {0, t, Actor::kSystem, EventKind::kSessionEnd, EmptyPayload{}};
}

SessionEvent tick(Millis t) {
  return {0, t, Actor::kSystem, EventKind::kSilenceTick, EmptyPayload{}};
}

SessionEvent user_utterance(Millis t, const UserUtterance& u) {
  return {0, t, Actor::kUser, EventKind::kUtterance,
          UtterancePayload{u.text, u.session_time_ms, u.annotations}};
}

SessionEvent end_of_turn(Millis t) {
  return {0, t, Actor::kUser, EventKind::kEndOfTurn, EmptyPayload{}};
}

SessionEvent operator_toggle(Millis t, std::string cause) {
  // The target is filled in by the control machine.
  return {0, t, Actor::kOperator, EventKind::kControlChange,
          ControlPayload{ControlMode::kOperator, std::move(cause)}};
}

SessionEvent operator_speech(Millis t, std::string text, std::optional<Expression> expression,
                             Millis duration_ms) {
  ResponsePayload p;
  p.kind = ResponseKind::kOperatorSpeech;
  p.text = std::move(text);
  p.expression = expression;
  p.duration_ms = duration_ms;
  return {0, t, Actor::kOperator, EventKind::kResponse, std::move(p)};
}

SessionEvent operator_expression(Millis t, Expression e) {
  return {0, t, Actor::kOperator, EventKind::kExpression, ExpressionPayload{e}};
}

}  // namespace events

std::string encode_event(const SessionEvent& e) {
  ordered_json j;
  j["seq"] = e.seq;
  j["t_ms"] = e.t_ms;
  j["actor"] = to_string(e.actor);
  j["kind"] = to_string(e.kind);
  j["payload"] = std::visit(PayloadEncoder{}, e.payload);
  return j.dump();
}

SessionEvent decode_event(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    corrupt(std::string("unparseable record: ") + e.what());
  }
  only_keys(j, {"seq", "t_ms", "actor", "kind", "payload"}, "record");
  SessionEvent e;
  e.seq = get<std::uint64_t>(j, "seq");
  e.t_ms = get<Millis>(j, "t_ms");
  e.actor = parse_name(need(j, "actor"), parse_actor, "actor");
  e.kind = parse_name(need(j, "kind"), parse_event_kind, "event kind");
  e.payload = decode_payload(e.kind, need(j, "payload"));
  return e;
}

}  // namespace semiauto
