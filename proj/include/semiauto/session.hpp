#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semiauto/config.hpp"
#include "semiauto/detector.hpp"
#include "semiauto/dialogue.hpp"
#include "semiauto/event.hpp"

namespace semiauto {

// Operator mic toggle. Non-control events pass through, except that operator
// speech or expressions in AgentControl raise Error(kNotInControl). A control
// change from anyone but the operator raises Error(kAuthorization).
ControlMode apply_control_event(ControlMode mode, const SessionEvent& event);

// Throws Error(kNotInControl) in AgentControl and Error(kMalformedInput) on
// blank text.
AgentResponse emit_operator_speech(const std::string& text,
                                   std::optional<Expression> expression, ControlMode mode,
                                   Millis t_ms);

struct DialogueState {
  RngState rng;
  // Silence is measured from here: the latest user utterance, agent output,
  // operator speech or control change.
  Millis silence_base_ms = 0;
  // Merged utterances of the user turn in progress.
  std::optional<UserUtterance> open_turn;
  std::optional<UserUtterance> last_utterance;
  bool backchannel_given = false;

  bool operator==(const DialogueState&) const = default;
};

struct SessionState {
  std::string session_id;
  ControlMode mode = ControlMode::kAgent;
  DialogueState dialogue;
  DetectorState detector;
  std::uint64_t last_seq = 0;
  Millis last_t_ms = 0;
  bool started = false;
  bool ended = false;

  bool operator==(const SessionState&) const = default;
};

struct SessionLog {
  std::string session_id;
  Config config_snapshot;
  std::vector<SessionEvent> events;

  bool operator==(const SessionLog&) const = default;
};

// One single-writer event loop's worth of session logic. Input events are
// applied in order; each call returns the input as appended (with seq and any
// control target filled in) followed by every output it caused.
class SessionEngine {
 public:
  using Sink = std::function<void(const SessionEvent&)>;

  SessionEngine(std::string session_id, Config config,
                std::shared_ptr<const BackchannelPolicy> policy = default_backchannel_policy());

  // Invoked for every appended event, in order.
  void set_sink(Sink sink) { sink_ = std::move(sink); }

  std::vector<SessionEvent> start(Millis t_ms);
  std::vector<SessionEvent> apply(SessionEvent input);

  std::vector<SessionEvent> tick(Millis t_ms) { return apply(events::tick(t_ms)); }
  std::vector<SessionEvent> end(Millis t_ms) { return apply(events::session_end(t_ms)); }

  // Milliseconds of silence shown to the operator.
  Millis silence_ms(Millis now) const { return now - state_.dialogue.silence_base_ms; }

  const SessionState& state() const { return state_; }
  const SessionLog& log() const { return log_; }
  const Config& config() const { return config_; }

 private:
  void append(SessionEvent event, std::vector<SessionEvent>& out);
  void emit_agent(const AgentResponse& response, EventKind kind,
                  std::vector<SessionEvent>& out);
  void on_tick(Millis t, std::vector<SessionEvent>& out);
  void on_end_of_turn(Millis t, std::vector<SessionEvent>& out);

  Config config_;
  std::shared_ptr<const BackchannelPolicy> policy_;
  SessionState state_;
  SessionLog log_;
  Sink sink_;
};

struct ReplayResult {
  SessionState state;
  SessionLog log;
};

// Re-drives a fresh engine with the log's input events. Outputs are
// regenerated, not copied, and must match the recorded ones.
//
// Throws Error(kCorruptLog) naming the offending seq on a seq gap, a
// timestamp regression, a missing or misplaced session_start, or any
// divergence between recorded and regenerated events.
ReplayResult append_and_replay(const SessionLog& log);

// Structural checks only (seq continuity, time order, start record).
void check_log_integrity(const SessionLog& log);

std::string serialize_log(const SessionLog& log);
SessionLog parse_log(const std::string& jsonl);

SessionLog read_log_file(const std::filesystem::path& path);
void write_log_file(const std::filesystem::path& path, const SessionLog& log);

// Kinds the engine accepts as input; the rest are derived outputs.
bool is_input_event(const SessionEvent& event);

}  // namespace semiauto
