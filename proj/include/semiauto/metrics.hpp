#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "json.hpp"
#include "semiauto/session.hpp"

namespace semiauto::sim {

struct SessionMetrics {
  std::string session_id;
  std::int64_t takeover_count = 0;
  // Operator speech, each utterance clipped to its takeover and to the next
  // operator utterance.
  Millis operator_speech_ms = 0;
  Millis operator_control_ms = 0;
  std::int64_t prompt_count = 0;
  std::map<TakeoverCondition, std::int64_t> per_condition_prompt_counts;
  double mean_speech_ms_per_takeover = 0.0;
  Millis session_length_ms = 0;

  bool operator==(const SessionMetrics&) const = default;
};

SessionMetrics compute_metrics(const SessionLog& log);

struct CorpusSummary {
  std::size_t sessions = 0;
  double median_takeovers = 0.0;
  std::int64_t min_takeovers = 0;
  std::int64_t max_takeovers = 0;
  double mean_operator_speech_ms = 0.0;
  double mean_speech_ms_per_takeover = 0.0;

  bool operator==(const CorpusSummary&) const = default;
};

// Median takes the mean of the middle two for an even count. Throws
// Error(kEmptyInput) for an empty corpus.
CorpusSummary summarize(std::span<const SessionMetrics> metrics);

nlohmann::ordered_json to_json(const SessionMetrics& m);
nlohmann::ordered_json to_json(const CorpusSummary& s);

}  // namespace semiauto::sim
