#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semiauto/event.hpp"
#include "semiauto/text.hpp"
#include "semiauto/types.hpp"

namespace semiauto {

using TurnLengthFn = std::size_t (*)(std::string_view);

struct DetectorConfig {
  Millis silence_takeover_ms = 4000;
  std::size_t short_turn_chars = 20;
  std::size_t short_turn_count = 2;
  std::size_t formulaic_run = 3;
  std::size_t starvation_window = 4;
  Millis prompt_cooldown_ms = 10000;
  // Not serialized.
  TurnLengthFn turn_length = &text::normalized_length;

  // Throws Error(kConfig).
  void validate() const;

  std::size_t response_window() const {
    return formulaic_run > starvation_window ? formulaic_run : starvation_window;
  }

  bool operator==(const DetectorConfig&) const = default;
};

struct TurnResponseRecord {
  ResponseKind kind = ResponseKind::kFormulaic;
  bool has_sentiment = false;

  bool operator==(const TurnResponseRecord&) const = default;
};

struct DetectorState {
  std::deque<std::size_t> recent_user_turn_lengths;
  std::deque<TurnResponseRecord> recent_turn_responses;
  // Text of the user turn in progress; its length is queued at end of turn.
  std::optional<std::string> open_turn_text;
  Millis last_activity_ms = 0;
  std::optional<Millis> last_prompt_ms;
  Millis now_ms = 0;
  bool suspended = false;

  bool operator==(const DetectorState&) const = default;
};

struct TakeoverPrompt {
  Millis session_time_ms = 0;
  std::vector<TakeoverCondition> reasons;

  bool operator==(const TakeoverPrompt&) const = default;
};

struct DetectorStep {
  DetectorState state;
  std::optional<TakeoverPrompt> prompt;
};

// Every condition that holds at `now`, in display priority order.
std::vector<TakeoverCondition> evaluate_conditions(const DetectorState& state, Millis now,
                                                   const DetectorConfig& config);

// Folds one session event into the detector.
//
// User utterances extend the open turn and count as activity. End of turn
// queues the turn length. Agent turn responses are queued; every agent
// output counts as activity. A control change to the operator resets and
// suspends the detector; the change back resumes it with the silence clock
// restarted. Conditions are evaluated after user utterances, agent outputs
// and ticks; at most two reasons are reported.
//
// Throws Error(kOrdering) when the event is older than the previous one.
DetectorStep detector_update(DetectorState state, const SessionEvent& event,
                             const DetectorConfig& config);

DetectorState detector_reset_on_takeover(DetectorState state, Millis takeover_ms);

inline constexpr std::size_t kMaxDisplayedReasons = 2;

}  // namespace semiauto
