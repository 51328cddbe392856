#include "semiauto/wire.hpp"

#include <algorithm>
#include <set>

#include "semiauto/error.hpp"

namespace semiauto::wire {
namespace {

using json = nlohmann::ordered_json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void schema(const std::string& why) { throw Error(ErrorCode::kSchema, why); }

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) schema(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) schema("unexpected key '" + key + "' in " + where);
  }
}

std::string need_string(const json& body, const char* key, const std::string& where) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    schema(where + " needs string '" + key + "'");
  }
  return body.at(key).get<std::string>();
}

Expression need_expression(const json& value) {
  if (!value.is_string()) schema("expression must be a string");
  auto e = parse_expression(value.get<std::string>());
  if (!e) schema("unknown expression '" + value.get<std::string>() + "'");
  return *e;
}

ordered_json response_body(const SessionEvent& e) {
  const auto& p = e.as<ResponsePayload>();
  ordered_json body;
  body["speaker"] = to_string(e.actor);
  body["kind"] = to_string(p.kind);
  body["text"] = p.text;
  body["has_sentiment"] = p.has_sentiment;
  if (p.expression) body["expression"] = to_string(*p.expression);
  if (p.duration_ms) body["duration_ms"] = *p.duration_ms;
  return body;
}

}  // namespace

bool is_known_type(std::string_view type) {
  return std::find(std::begin(kMessageTypes), std::end(kMessageTypes), type) !=
         std::end(kMessageTypes);
}

std::string_view to_string(Endpoint e) { return e == Endpoint::kUser ? "user" : "operator"; }

std::string encode(const WireMessage& m) {
  ordered_json j;
  j["type"] = m.type;
  j["session_id"] = m.session_id;
  j["t_ms"] = m.t_ms;
  j["body"] = m.body;
  return j.dump();
}

WireMessage decode(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    schema("frame is not valid JSON");
  }
  only_keys(j, {"type", "session_id", "t_ms", "body"}, "frame");
  WireMessage m;
  m.type = need_string(j, "type", "frame");
  if (!is_known_type(m.type)) schema("unknown message type '" + m.type + "'");
  m.session_id = need_string(j, "session_id", "frame");
  if (j.contains("t_ms")) {
    if (!j.at("t_ms").is_number_integer()) schema("t_ms must be an integer");
    m.t_ms = j.at("t_ms").get<Millis>();
  }
  if (j.contains("body")) {
    if (!j.at("body").is_object()) schema("body must be an object");
    m.body = j.at("body");
  }
  return m;
}

WireMessage make_error(const std::string& session_id, Millis t_ms, std::string_view code,
                       const std::string& message) {
  return WireMessage{"error", session_id, t_ms,
                     json{{"code", std::string(code)}, {"message", message}}};
}

SessionChannel::SessionChannel(std::string session_id, Config config)
    : session_id_(session_id), engine_(std::move(session_id), std::move(config)) {}

Millis SessionChannel::clamp(Millis now) const {
  return std::max(now, engine_.state().last_t_ms);
}

std::vector<Outbound> SessionChannel::open(Millis now) {
  return translate(engine_.start(std::max<Millis>(now, 0)));
}

std::vector<Outbound> SessionChannel::handle_inbound(Endpoint from, const WireMessage& m,
                                                     Millis now) {
  const Recipient sender = from == Endpoint::kUser ? Recipient::kUser : Recipient::kOperator;
  const Millis t = clamp(now);
  auto reject = [&](std::string_view code, const std::string& why) {
    return std::vector<Outbound>{{sender, make_error(session_id_, t, code, why)}};
  };
  if (m.session_id != session_id_) {
    return reject(error_code_name(ErrorCode::kNoSuchSession),
                  "no such session '" + m.session_id + "'");
  }
  if (engine_.state().ended) {
    return reject(error_code_name(ErrorCode::kMalformedInput), "session has ended");
  }

  try {
    SessionEvent input;
    const auto& body = m.body;
    const std::string where = std::string(to_string(from)) + " " + m.type;
    if (from == Endpoint::kUser && m.type == "user_utterance") {
      only_keys(body, {"text", "start_ms", "annotations"}, where);
      UserUtterance u;
      u.text = need_string(body, "text", where);
      u.end_time_ms = t;
      u.session_time_ms = t;
      if (body.contains("start_ms")) {
        if (!body.at("start_ms").is_number_integer()) schema("start_ms must be an integer");
        u.session_time_ms = std::min(body.at("start_ms").get<Millis>(), t);
      }
      if (body.contains("annotations")) {
        if (!body.at("annotations").is_array()) schema("annotations must be a list");
        for (const auto& a : body.at("annotations")) {
          try {
            u.annotations.push_back(annotation_from_json(nlohmann::json(a)));
          } catch (const Error& e) {
            schema(e.what());
          }
        }
      }
      input = events::user_utterance(t, u);
    } else if (from == Endpoint::kUser && m.type == "end_of_turn") {
      only_keys(body, {}, where);
      input = events::end_of_turn(t);
    } else if (from == Endpoint::kUser && m.type == "session_end") {
      only_keys(body, {}, where);
      return close(t);
    } else if (from == Endpoint::kOperator && m.type == "control_change") {
      only_keys(body, {"cause"}, where);
      std::string cause = "operator";
      if (body.contains("cause")) cause = need_string(body, "cause", where);
      input = events::operator_toggle(t, std::move(cause));
    } else if (from == Endpoint::kOperator && m.type == "operator_utterance") {
      only_keys(body, {"text", "expression", "duration_ms"}, where);
      std::optional<Expression> expression;
      if (body.contains("expression")) expression = need_expression(body.at("expression"));
      auto speech = events::operator_speech(t, need_string(body, "text", where), expression, 0);
      auto& p = std::get<ResponsePayload>(speech.payload);
      p.duration_ms.reset();
      if (body.contains("duration_ms")) {
        if (!body.at("duration_ms").is_number_integer()) schema("duration_ms must be an integer");
        p.duration_ms = body.at("duration_ms").get<Millis>();
      }
      input = std::move(speech);
    } else if (from == Endpoint::kOperator && m.type == "expression") {
      only_keys(body, {"expression"}, where);
      if (!body.contains("expression")) schema(where + " needs 'expression'");
      input = events::operator_expression(t, need_expression(body.at("expression")));
    } else {
      schema("message type '" + m.type + "' is not accepted from the " +
             std::string(to_string(from)));
    }
    return translate(engine_.apply(std::move(input)));
  } catch (const Error& e) {
    return reject(error_code_name(e.code()), e.what());
  }
}

std::vector<Outbound> SessionChannel::tick(Millis now) {
  if (engine_.state().ended) return {};
  const Millis t = clamp(now);
  std::vector<SessionEvent> produced;
  if (operator_absent_since_ && engine_.state().mode == ControlMode::kOperator &&
      t - *operator_absent_since_ >= engine_.config().server.operator_grace_ms) {
    produced = engine_.apply(events::operator_toggle(t, "operator_disconnect"));
    operator_absent_since_.reset();
  }
  const Millis silence = engine_.silence_ms(t);
  auto ticked = engine_.tick(t);
  produced.insert(produced.end(), ticked.begin(), ticked.end());
  return translate(produced, silence);
}

std::vector<Outbound> SessionChannel::close(Millis now) {
  if (engine_.state().ended) return {};
  return translate(engine_.end(clamp(now)));
}

void SessionChannel::operator_disconnected(Millis now) { operator_absent_since_ = clamp(now); }

void SessionChannel::operator_connected() { operator_absent_since_.reset(); }

std::vector<Outbound> SessionChannel::translate(const std::vector<SessionEvent>& events,
                                                std::optional<Millis> silence_ms) const {
  std::vector<Outbound> out;
  const auto& cfg = engine_.config();
  auto send = [&](Recipient to, const char* type, Millis t, ordered_json body) {
    out.push_back({to, WireMessage{type, session_id_, t, std::move(body)}});
  };
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::kSessionStart: {
        ordered_json body;
        body["mode"] = to_string(engine_.state().mode);
        body["tick_ms"] = cfg.server.tick_ms;
        body["threshold_ms"] = cfg.detector.silence_takeover_ms;
        send(Recipient::kBoth, "session_start", e.t_ms, body);
        break;
      }
      case EventKind::kSessionEnd:
        send(Recipient::kBoth, "session_end", e.t_ms, ordered_json::object());
        break;
      case EventKind::kSilenceTick:
        if (silence_ms) {
          ordered_json body;
          body["silence_ms"] = *silence_ms;
          body["threshold_ms"] = cfg.detector.silence_takeover_ms;
          send(Recipient::kOperator, "silence_update", e.t_ms, body);
        }
        break;
      case EventKind::kUtterance: {
        const auto& p = e.as<UtterancePayload>();
        ordered_json body;
        body["text"] = p.text;
        body["start_ms"] = p.start_ms;
        body["annotations"] = ordered_json::array();
        for (const auto& a : p.annotations) body["annotations"].push_back(annotation_to_json(a));
        send(Recipient::kOperator, "user_utterance", e.t_ms, body);
        break;
      }
      case EventKind::kEndOfTurn:
        send(Recipient::kOperator, "end_of_turn", e.t_ms, ordered_json::object());
        break;
      case EventKind::kResponse:
        send(Recipient::kBoth, "agent_response", e.t_ms, response_body(e));
        break;
      case EventKind::kBackchannel:
        send(Recipient::kBoth, "backchannel", e.t_ms, response_body(e));
        break;
      case EventKind::kTakeoverPrompt: {
        ordered_json reasons = ordered_json::array();
        for (auto r : e.as<PromptPayload>().reasons) {
          ordered_json reason;
          reason["code"] = to_string(r);
          auto it = cfg.server.reason_text.find(r);
          reason["text"] = it != cfg.server.reason_text.end() ? it->second : std::string();
          reasons.push_back(reason);
        }
        send(Recipient::kOperator, "takeover_prompt", e.t_ms, {{"reasons", reasons}});
        break;
      }
      case EventKind::kControlChange: {
        const auto& p = e.as<ControlPayload>();
        ordered_json body;
        body["mode"] = to_string(p.target);
        if (!p.cause.empty()) body["cause"] = p.cause;
        send(Recipient::kBoth, "control_change", e.t_ms, body);
        break;
      }
      case EventKind::kExpression:
        send(Recipient::kBoth, "expression", e.t_ms,
             {{"expression", to_string(e.as<ExpressionPayload>().expression)}});
        break;
    }
  }
  return out;
}

}  // namespace semiauto::wire
