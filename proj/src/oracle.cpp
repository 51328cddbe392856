#include "semiauto/oracle.hpp"

#include <optional>
#include <string>

namespace semiauto::sim {
namespace {

bool is_user(const SessionEvent& e, EventKind kind) {
  return e.actor == Actor::kUser && e.kind == kind;
}

bool is_agent_output(const SessionEvent& e) {
  return e.actor == Actor::kAgent &&
         (e.kind == EventKind::kResponse || e.kind == EventKind::kBackchannel);
}

bool is_evaluation_point(const SessionEvent& e) {
  return is_user(e, EventKind::kUtterance) || is_agent_output(e) ||
         e.kind == EventKind::kSilenceTick;
}

}  // namespace

std::vector<OracleFinding> oracle_scan_detailed(const SessionLog& log,
                                                const DetectorConfig& config) {
  check_log_integrity(log);
  const auto& ev = log.events;
  const std::size_t n = ev.size();

  // Index of the latest control change (or session start) at or before i,
  // and who holds control after event i.
  std::vector<std::size_t> boundary(n, 0);
  std::vector<bool> agent_holds(n, true);
  {
    std::size_t b = 0;
    bool agent = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (ev[i].kind == EventKind::kControlChange) {
        b = i;
        agent = ev[i].as<ControlPayload>().target == ControlMode::kAgent;
      }
      boundary[i] = b;
      agent_holds[i] = agent;
    }
  }

  std::vector<OracleFinding> findings;
  std::optional<std::size_t> last_prompt_at;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = ev[i];
    if (!is_evaluation_point(e) || !agent_holds[i]) continue;
    const std::size_t b = boundary[i];

    Millis last_activity = ev[b].t_ms;
    for (std::size_t j = i; j > b; --j) {
      if (is_user(ev[j], EventKind::kUtterance) || is_agent_output(ev[j])) {
        last_activity = ev[j].t_ms;
        break;
      }
    }

    // Completed user turns, newest first: each end_of_turn closes the
    // utterances back to the previous end_of_turn.
    std::vector<std::size_t> turn_lengths;
    for (std::size_t j = i; j > b && turn_lengths.size() < config.short_turn_count;) {
      if (!is_user(ev[j], EventKind::kEndOfTurn)) {
        --j;
        continue;
      }
      std::vector<const std::string*> parts;
      std::size_t k = j - 1;
      while (k > b && !is_user(ev[k], EventKind::kEndOfTurn)) {
        if (is_user(ev[k], EventKind::kUtterance)) {
          parts.push_back(&ev[k].as<UtterancePayload>().text);
        }
        --k;
      }
      if (!parts.empty()) {
        std::string joined;
        for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
          if (!joined.empty()) joined += ' ';
          joined += **it;
        }
        turn_lengths.push_back(config.turn_length(joined));
      }
      j = k;
    }

    // Turn responses, newest first.
    std::vector<const ResponsePayload*> responses;
    const std::size_t want = std::max(config.formulaic_run, config.starvation_window);
    for (std::size_t j = i; j > b && responses.size() < want; --j) {
      if (!is_agent_output(ev[j])) continue;
      const auto& r = ev[j].as<ResponsePayload>();
      if (r.kind == ResponseKind::kAssessment || r.kind == ResponseKind::kElaboratingQuestion ||
          r.kind == ResponseKind::kRepeatedResponse || r.kind == ResponseKind::kFormulaic) {
        responses.push_back(&r);
      }
    }

    std::vector<TakeoverCondition> held;
    if (e.t_ms - last_activity > config.silence_takeover_ms) {
      held.push_back(TakeoverCondition::kLongSilence);
    }
    if (turn_lengths.size() == config.short_turn_count) {
      bool all_short = true;
      for (auto len : turn_lengths) all_short = all_short && len < config.short_turn_chars;
      if (all_short) held.push_back(TakeoverCondition::kShortTurns);
    }
    if (responses.size() >= config.formulaic_run) {
      bool run = true;
      for (std::size_t k = 0; k < config.formulaic_run; ++k) {
        run = run && responses[k]->kind == ResponseKind::kFormulaic;
      }
      if (run) held.push_back(TakeoverCondition::kConsecutiveFormulaic);
    }
    if (responses.size() >= config.starvation_window) {
      bool starved = true;
      for (std::size_t k = 0; k < config.starvation_window; ++k) {
        starved = starved && !responses[k]->has_sentiment &&
                  responses[k]->kind != ResponseKind::kElaboratingQuestion;
      }
      if (starved) held.push_back(TakeoverCondition::kNoSentimentOrQuestion);
    }
    if (held.empty()) continue;

    // Prompts before the latest control change are forgotten.
    if (last_prompt_at && *last_prompt_at > b &&
        e.t_ms - ev[*last_prompt_at].t_ms <= config.prompt_cooldown_ms) {
      continue;
    }

    OracleFinding f;
    f.seq = e.seq;
    f.held = held;
    f.prompt.session_time_ms = e.t_ms;
    f.prompt.reasons.assign(held.begin(), held.begin() + std::min<std::size_t>(held.size(), 2));
    findings.push_back(std::move(f));
    last_prompt_at = i;
  }
  return findings;
}

std::vector<TakeoverPrompt> oracle_scan(const SessionLog& log, const DetectorConfig& config) {
  std::vector<TakeoverPrompt> out;
  for (auto& f : oracle_scan_detailed(log, config)) out.push_back(std::move(f.prompt));
  return out;
}

std::vector<TakeoverPrompt> recorded_prompts(const SessionLog& log) {
  std::vector<TakeoverPrompt> out;
  for (const auto& e : log.events) {
    if (e.kind == EventKind::kTakeoverPrompt) {
      out.push_back({e.t_ms, e.as<PromptPayload>().reasons});
    }
  }
  return out;
}

}  // namespace semiauto::sim
