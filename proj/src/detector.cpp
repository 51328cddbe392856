#include "semiauto/detector.hpp"

#include <algorithm>

#include "semiauto/error.hpp"

namespace semiauto {
namespace {

template <typename T>
void push_bounded(std::deque<T>& q, T value, std::size_t capacity) {
  q.push_back(std::move(value));
  while (q.size() > capacity) q.pop_front();
}

bool evaluates_after(const SessionEvent& e) {
  switch (e.kind) {
    case EventKind::kUtterance:
    case EventKind::kResponse:
    case EventKind::kBackchannel:
    case EventKind::kSilenceTick:
      return true;
    default:
      return false;
  }
}

}  // namespace

void DetectorConfig::validate() const {
  if (silence_takeover_ms <= 0) throw Error(ErrorCode::kConfig, "silence_takeover_ms must be > 0");
  if (short_turn_chars == 0) throw Error(ErrorCode::kConfig, "short_turn_chars must be > 0");
  if (short_turn_count == 0) throw Error(ErrorCode::kConfig, "short_turn_count must be > 0");
  if (formulaic_run == 0) throw Error(ErrorCode::kConfig, "formulaic_run must be > 0");
  if (starvation_window == 0) throw Error(ErrorCode::kConfig, "starvation_window must be > 0");
  if (prompt_cooldown_ms < 0) throw Error(ErrorCode::kConfig, "prompt_cooldown_ms must be >= 0");
  if (turn_length == nullptr) throw Error(ErrorCode::kConfig, "turn_length function missing");
}

std::vector<TakeoverCondition> evaluate_conditions(const DetectorState& s, Millis now,
                                                   const DetectorConfig& config) {
  std::vector<TakeoverCondition> held;
  if (now - s.last_activity_ms > config.silence_takeover_ms) {
    held.push_back(TakeoverCondition::kLongSilence);
  }

  const auto& turns = s.recent_user_turn_lengths;
  if (turns.size() >= config.short_turn_count &&
      std::all_of(turns.end() - static_cast<std::ptrdiff_t>(config.short_turn_count),
                  turns.end(),
                  [&](std::size_t len) { return len < config.short_turn_chars; })) {
    held.push_back(TakeoverCondition::kShortTurns);
  }

  const auto& responses = s.recent_turn_responses;
  if (responses.size() >= config.formulaic_run &&
      std::all_of(responses.end() - static_cast<std::ptrdiff_t>(config.formulaic_run),
                  responses.end(), [](const TurnResponseRecord& r) {
                    return r.kind == ResponseKind::kFormulaic;
                  })) {
    held.push_back(TakeoverCondition::kConsecutiveFormulaic);
  }

  if (responses.size() >= config.starvation_window &&
      std::none_of(responses.end() - static_cast<std::ptrdiff_t>(config.starvation_window),
                   responses.end(), [](const TurnResponseRecord& r) {
                     return r.has_sentiment || r.kind == ResponseKind::kElaboratingQuestion;
                   })) {
    held.push_back(TakeoverCondition::kNoSentimentOrQuestion);
  }
  return held;
}

DetectorState detector_reset_on_takeover(DetectorState state, Millis takeover_ms) {
  state.recent_user_turn_lengths.clear();
  state.recent_turn_responses.clear();
  state.open_turn_text.reset();
  state.last_activity_ms = takeover_ms;
  state.last_prompt_ms.reset();
  state.suspended = true;
  return state;
}

DetectorStep detector_update(DetectorState state, const SessionEvent& event,
                             const DetectorConfig& config) {
  if (event.t_ms < state.now_ms) {
    throw Error(ErrorCode::kOrdering, "event seq " + std::to_string(event.seq) + " at " +
                                          std::to_string(event.t_ms) + " ms precedes " +
                                          std::to_string(state.now_ms) + " ms");
  }
  state.now_ms = event.t_ms;

  if (event.kind == EventKind::kSessionStart) {
    state.last_activity_ms = event.t_ms;
    return {std::move(state), std::nullopt};
  }

  if (event.kind == EventKind::kControlChange) {
    if (event.as<ControlPayload>().target == ControlMode::kOperator) {
      return {detector_reset_on_takeover(std::move(state), event.t_ms), std::nullopt};
    }
    state.suspended = false;
    state.last_activity_ms = event.t_ms;
    return {std::move(state), std::nullopt};
  }

  if (state.suspended) return {std::move(state), std::nullopt};

  switch (event.kind) {
    case EventKind::kUtterance:
      if (event.actor == Actor::kUser) {
        const auto& text = event.as<UtterancePayload>().text;
        if (state.open_turn_text) {
          *state.open_turn_text += ' ';
          *state.open_turn_text += text;
        } else {
          state.open_turn_text = text;
        }
        state.last_activity_ms = event.t_ms;
      }
      break;
    case EventKind::kEndOfTurn:
      if (state.open_turn_text) {
        push_bounded(state.recent_user_turn_lengths, config.turn_length(*state.open_turn_text),
                     config.short_turn_count);
        state.open_turn_text.reset();
      }
      break;
    case EventKind::kResponse:
    case EventKind::kBackchannel:
      if (event.actor == Actor::kAgent) {
        const auto& r = event.as<ResponsePayload>();
        if (is_turn_response(r.kind)) {
          push_bounded(state.recent_turn_responses, TurnResponseRecord{r.kind, r.has_sentiment},
                       config.response_window());
        }
        state.last_activity_ms = event.t_ms;
      }
      break;
    default:
      break;
  }

  if (!evaluates_after(event)) return {std::move(state), std::nullopt};

  auto held = evaluate_conditions(state, event.t_ms, config);
  if (held.empty()) return {std::move(state), std::nullopt};
  if (state.last_prompt_ms && event.t_ms - *state.last_prompt_ms <= config.prompt_cooldown_ms) {
    return {std::move(state), std::nullopt};
  }
  if (held.size() > kMaxDisplayedReasons) held.resize(kMaxDisplayedReasons);
  state.last_prompt_ms = event.t_ms;
  return {std::move(state), TakeoverPrompt{event.t_ms, std::move(held)}};
}

}  // namespace semiauto
