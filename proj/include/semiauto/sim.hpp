#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "semiauto/config.hpp"
#include "semiauto/event.hpp"
#include "semiauto/session.hpp"

namespace semiauto::sim {

// A scripted session. Steps are input events in time order; a silence_tick
// step is a plain wait and a session_end step ends the run early.
struct Script {
  std::string session_id = "scripted";
  std::optional<Millis> session_length_ms;
  std::vector<SessionEvent> steps;

  bool operator==(const Script&) const = default;
};

// Throws Error(kScript) naming the step index: time going backwards,
// operator speech or expressions outside an operator takeover, non-input
// kinds, steps after session_end.
void validate_script(const Script& script);

// JSON Lines in the session-log record shape. seq is optional. An optional
// first record {"kind":"session_start","payload":{"session_id":..,
// "session_length_ms":..}} names the session. Utterance start_ms defaults to
// t_ms, annotations to [], operator response kind to operator_speech.
Script parse_script(const std::string& jsonl);
Script read_script_file(const std::filesystem::path& path);
std::string serialize_script(const Script& script);

// Drives a fresh engine under a virtual clock. Time jumps to each step and to
// each tick boundary (multiples of server.tick_ms); steps at a tick instant
// run before the tick. The run ends at the later of session_length_ms and the
// last step.
SessionLog run_script(const Script& script, const Config& config);

struct FuzzOptions {
  Millis min_length_ms = 60'000;
  Millis max_length_ms = 600'000;
  std::size_t max_words = 14;
  double short_utterance_probability = 0.35;
  double focus_probability = 0.6;
  double sentiment_probability = 0.3;
  double takeover_probability = 0.12;
  double long_gap_probability = 0.3;
  // Utterances from the user while the operator holds control.
  double user_during_takeover_probability = 0.3;
};

// Deterministic random script for `seed`.
Script generate_script(std::uint64_t seed, const FuzzOptions& options = {});

}  // namespace semiauto::sim
