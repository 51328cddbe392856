#pragma once

#include <string>
#include <vector>

#include "semiauto/config.hpp"
#include "semiauto/event.hpp"
#include "semiauto/session.hpp"
#include "semiauto/sim.hpp"

namespace testing_support {

using namespace semiauto;

inline Annotation focus(std::string word, double confidence,
                        std::optional<std::string> category = std::nullopt) {
  return Annotation{AnnotationKind::kFocusWord, std::move(word), confidence, std::move(category)};
}

inline Annotation sentiment(std::string polarity, double confidence) {
  return Annotation{AnnotationKind::kSentiment, std::move(polarity), confidence, std::nullopt};
}

inline UserUtterance utterance(std::string text, std::vector<Annotation> annotations = {},
                               Millis start = 0, Millis end = 0) {
  return UserUtterance{start, end, std::move(text), std::move(annotations)};
}

// Builds scripts step by step; times are absolute milliseconds.
class ScriptBuilder {
 public:
  explicit ScriptBuilder(std::string id = "test") { script_.session_id = std::move(id); }

  ScriptBuilder& say(Millis t, std::string text, std::vector<Annotation> annotations = {},
                     std::optional<Millis> start = std::nullopt) {
    script_.steps.push_back(events::user_utterance(
        t, UserUtterance{start.value_or(t), t, std::move(text), std::move(annotations)}));
    return *this;
  }
  ScriptBuilder& end_turn(Millis t) {
    script_.steps.push_back(events::end_of_turn(t));
    return *this;
  }
  // say + end_turn at the same instant.
  ScriptBuilder& turn(Millis t, std::string text, std::vector<Annotation> annotations = {}) {
    say(t, std::move(text), std::move(annotations));
    return end_turn(t);
  }
  ScriptBuilder& toggle(Millis t) {
    script_.steps.push_back(events::operator_toggle(t));
    return *this;
  }
  ScriptBuilder& operator_say(Millis t, std::string text, Millis duration,
                              std::optional<Expression> e = std::nullopt) {
    script_.steps.push_back(events::operator_speech(t, std::move(text), e, duration));
    return *this;
  }
  ScriptBuilder& expression(Millis t, Expression e) {
    script_.steps.push_back(events::operator_expression(t, e));
    return *this;
  }
  ScriptBuilder& wait(Millis t) {
    script_.steps.push_back(events::tick(t));
    return *this;
  }
  ScriptBuilder& length(Millis ms) {
    script_.session_length_ms = ms;
    return *this;
  }
  const sim::Script& script() const { return script_; }

 private:
  sim::Script script_;
};

inline std::vector<SessionEvent> of_kind(const SessionLog& log, EventKind kind) {
  std::vector<SessionEvent> out;
  for (const auto& e : log.events) {
    if (e.kind == kind) out.push_back(e);
  }
  return out;
}

inline std::vector<TakeoverPrompt> prompts(const SessionLog& log) {
  std::vector<TakeoverPrompt> out;
  for (const auto& e : of_kind(log, EventKind::kTakeoverPrompt)) {
    out.push_back({e.t_ms, e.as<PromptPayload>().reasons});
  }
  return out;
}

}  // namespace testing_support
