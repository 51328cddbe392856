#include "semiauto/session.hpp"

#include <fstream>
#include <sstream>

#include "semiauto/error.hpp"
#include "semiauto/text.hpp"

namespace semiauto {
namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::kMalformedInput, why);
}

std::string seq_label(std::uint64_t seq) { return "seq " + std::to_string(seq); }

}  // namespace

ControlMode apply_control_event(ControlMode mode, const SessionEvent& event) {
  switch (event.kind) {
    case EventKind::kControlChange:
      if (event.actor != Actor::kOperator) {
        throw Error(ErrorCode::kAuthorization, "only the operator may toggle control");
      }
      return mode == ControlMode::kAgent ? ControlMode::kOperator : ControlMode::kAgent;
    case EventKind::kResponse:
    case EventKind::kUtterance:
    case EventKind::kExpression:
      if (event.actor == Actor::kOperator && mode != ControlMode::kOperator) {
        throw Error(ErrorCode::kNotInControl, "operator does not hold control");
      }
      return mode;
    default:
      return mode;
  }
}

AgentResponse emit_operator_speech(const std::string& text,
                                   std::optional<Expression> expression, ControlMode mode,
                                   Millis t_ms) {
  if (mode != ControlMode::kOperator) {
    throw Error(ErrorCode::kNotInControl, "operator does not hold control");
  }
  if (!text::is_valid_utf8(text) || text::is_blank(text)) malformed("empty operator utterance");
  return AgentResponse{t_ms, ResponseKind::kOperatorSpeech, text, false, expression};
}

bool is_input_event(const SessionEvent& e) {
  switch (e.kind) {
    case EventKind::kSessionStart:
    case EventKind::kSessionEnd:
    case EventKind::kSilenceTick:
      return true;
    case EventKind::kUtterance:
    case EventKind::kEndOfTurn:
      return e.actor == Actor::kUser;
    case EventKind::kControlChange:
    case EventKind::kExpression:
    case EventKind::kResponse:
      return e.actor == Actor::kOperator;
    case EventKind::kBackchannel:
    case EventKind::kTakeoverPrompt:
      return false;
  }
  return false;
}

SessionEngine::SessionEngine(std::string session_id, Config config,
                             std::shared_ptr<const BackchannelPolicy> policy)
    : config_(std::move(config)), policy_(std::move(policy)) {
  config_.validate();
  state_.session_id = session_id;
  state_.dialogue.rng = RngState(config_.dialogue.rng_seed);
  log_.session_id = std::move(session_id);
  log_.config_snapshot = config_;
}

std::vector<SessionEvent> SessionEngine::start(Millis t_ms) {
  return apply(events::session_start(t_ms, state_.session_id, config_));
}

void SessionEngine::append(SessionEvent event, std::vector<SessionEvent>& out) {
  event.seq = ++state_.last_seq;
  state_.last_t_ms = event.t_ms;
  auto step = detector_update(std::move(state_.detector), event, config_.detector);
  state_.detector = std::move(step.state);
  log_.events.push_back(event);
  if (sink_) sink_(event);
  out.push_back(std::move(event));
  if (step.prompt) {
    append(SessionEvent{0, step.prompt->session_time_ms, Actor::kSystem,
                        EventKind::kTakeoverPrompt, PromptPayload{step.prompt->reasons}},
           out);
  }
}

void SessionEngine::emit_agent(const AgentResponse& r, EventKind kind,
                               std::vector<SessionEvent>& out) {
  ResponsePayload p;
  p.kind = r.kind;
  p.text = r.text;
  p.has_sentiment = r.has_sentiment;
  p.expression = r.expression;
  state_.dialogue.silence_base_ms = state_.last_t_ms;
  append(SessionEvent{0, state_.last_t_ms, Actor::kAgent, kind, std::move(p)}, out);
}

std::vector<SessionEvent> SessionEngine::apply(SessionEvent input) {
  std::vector<SessionEvent> out;
  const Millis t = input.t_ms;

  if (state_.ended) malformed("session " + state_.session_id + " has ended");
  if (!state_.started && input.kind != EventKind::kSessionStart) {
    malformed("session " + state_.session_id + " has not started");
  }
  if (t < state_.last_t_ms || t < 0) {
    throw Error(ErrorCode::kOrdering, "event at " + std::to_string(t) + " ms precedes " +
                                          std::to_string(state_.last_t_ms) + " ms");
  }
  if (input.kind == EventKind::kControlChange) apply_control_event(state_.mode, input);
  if (!is_input_event(input)) {
    malformed(std::string(to_string(input.kind)) + " from " +
              std::string(to_string(input.actor)) + " is not an input event");
  }

  auto& dialogue = state_.dialogue;
  switch (input.kind) {
    case EventKind::kSessionStart: {
      if (state_.started) malformed("session already started");
      input.actor = Actor::kSystem;
      input.payload = StartPayload{state_.session_id, std::make_shared<const Config>(config_)};
      state_.started = true;
      dialogue.silence_base_ms = t;
      append(std::move(input), out);
      break;
    }
    case EventKind::kSessionEnd:
      input.payload = EmptyPayload{};
      append(std::move(input), out);
      state_.ended = true;
      break;
    case EventKind::kSilenceTick:
      input.payload = EmptyPayload{};
      append(std::move(input), out);
      on_tick(t, out);
      break;
    case EventKind::kUtterance: {
      const auto utterance = input.utterance();
      validate(utterance);
      append(std::move(input), out);
      dialogue.silence_base_ms = t;
      dialogue.last_utterance = utterance;
      if (state_.mode == ControlMode::kAgent) {
        dialogue.open_turn =
            dialogue.open_turn ? merge_turn(*dialogue.open_turn, utterance) : utterance;
        dialogue.backchannel_given = false;
      }
      break;
    }
    case EventKind::kEndOfTurn:
      input.payload = EmptyPayload{};
      append(std::move(input), out);
      on_end_of_turn(t, out);
      break;
    case EventKind::kControlChange: {
      const ControlMode next = apply_control_event(state_.mode, input);
      std::get<ControlPayload>(input.payload).target = next;
      append(std::move(input), out);
      state_.mode = next;
      dialogue.silence_base_ms = t;
      dialogue.open_turn.reset();
      dialogue.backchannel_given = false;
      break;
    }
    case EventKind::kResponse: {
      apply_control_event(state_.mode, input);
      auto payload = input.as<ResponsePayload>();
      if (payload.kind != ResponseKind::kOperatorSpeech) {
        malformed("operator responses must be operator_speech");
      }
      const auto speech = emit_operator_speech(payload.text, payload.expression, state_.mode, t);
      payload.has_sentiment = speech.has_sentiment;
      if (!payload.duration_ms) {
        payload.duration_ms = static_cast<Millis>(text::normalized_length(payload.text)) *
                              config_.server.operator_ms_per_char;
      }
      if (*payload.duration_ms < 0) malformed("operator speech duration is negative");
      input.payload = payload;
      append(std::move(input), out);
      dialogue.silence_base_ms = t;
      if (speech.expression) {
        append(events::operator_expression(t, *speech.expression), out);
      }
      break;
    }
    case EventKind::kExpression:
      apply_control_event(state_.mode, input);
      append(std::move(input), out);
      break;
    default:
      malformed("unsupported input event");
  }
  return out;
}

void SessionEngine::on_end_of_turn(Millis t, std::vector<SessionEvent>& out) {
  auto& dialogue = state_.dialogue;
  auto turn = std::move(dialogue.open_turn);
  dialogue.open_turn.reset();
  dialogue.backchannel_given = false;
  if (state_.mode != ControlMode::kAgent || !turn) return;
  auto response = select_response(*turn, config_.dialogue, dialogue.rng);
  response.session_time_ms = t;
  emit_agent(response, EventKind::kResponse, out);
}

void SessionEngine::on_tick(Millis t, std::vector<SessionEvent>& out) {
  if (state_.mode != ControlMode::kAgent) return;
  auto& dialogue = state_.dialogue;

  if (dialogue.open_turn && !dialogue.backchannel_given && dialogue.last_utterance) {
    const Millis pause = t - dialogue.last_utterance->end_time_ms;
    if (auto bc = backchannel_decision(pause, *dialogue.last_utterance, config_.dialogue,
                                       dialogue.rng, *policy_)) {
      dialogue.backchannel_given = true;
      emit_agent(*bc, EventKind::kBackchannel, out);
    }
  }

  if (auto prompt = silence_prompt_check(t - dialogue.silence_base_ms, config_.dialogue,
                                         dialogue.rng)) {
    emit_agent(*prompt, EventKind::kResponse, out);
  }
}

void check_log_integrity(const SessionLog& log) {
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const auto& e = log.events[i];
    if (e.seq != i + 1) {
      throw Error(ErrorCode::kCorruptLog,
                  "seq gap: expected " + std::to_string(i + 1) + ", found " + seq_label(e.seq));
    }
    if (i > 0 && e.t_ms < log.events[i - 1].t_ms) {
      throw Error(ErrorCode::kCorruptLog, "timestamp regression at " + seq_label(e.seq));
    }
    if ((i == 0) != (e.kind == EventKind::kSessionStart)) {
      throw Error(ErrorCode::kCorruptLog, "session_start misplaced at " + seq_label(e.seq));
    }
  }
}

ReplayResult append_and_replay(const SessionLog& log) {
  check_log_integrity(log);
  SessionEngine engine(log.session_id, log.config_snapshot);
  std::size_t i = 0;
  while (i < log.events.size()) {
    const auto& recorded = log.events[i];
    if (!is_input_event(recorded)) {
      throw Error(ErrorCode::kCorruptLog,
                  "unexplained derived event at " + seq_label(recorded.seq));
    }
    std::vector<SessionEvent> produced;
    try {
      produced = engine.apply(recorded);
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptLog,
                  "input rejected at " + seq_label(recorded.seq) + ": " + e.what());
    }
    for (const auto& ev : produced) {
      if (i >= log.events.size() || !(log.events[i] == ev)) {
        throw Error(ErrorCode::kCorruptLog, "replay diverges at " + seq_label(ev.seq));
      }
      ++i;
    }
  }
  return {engine.state(), engine.log()};
}

std::string serialize_log(const SessionLog& log) {
  std::string out;
  for (const auto& e : log.events) {
    out += encode_event(e);
    out += '\n';
  }
  return out;
}

SessionLog parse_log(const std::string& jsonl) {
  SessionLog log;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    log.events.push_back(decode_event(line));
  }
  if (log.events.empty()) throw Error(ErrorCode::kCorruptLog, "log has no session_start");
  const auto& first = log.events.front();
  if (first.kind != EventKind::kSessionStart) {
    throw Error(ErrorCode::kCorruptLog, "first record is not session_start");
  }
  const auto& start = first.as<StartPayload>();
  log.session_id = start.session_id;
  log.config_snapshot = *start.config;
  return log;
}

SessionLog read_log_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kCorruptLog, "cannot open log " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_log(buffer.str());
}

void write_log_file(const std::filesystem::path& path, const SessionLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kCorruptLog, "cannot write log " + path.string());
  out << serialize_log(log);
}

}  // namespace semiauto
