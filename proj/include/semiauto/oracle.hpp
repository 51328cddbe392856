#pragma once

#include <cstdint>
#include <vector>

#include "semiauto/detector.hpp"
#include "semiauto/session.hpp"

namespace semiauto::sim {

struct OracleFinding {
  std::uint64_t seq = 0;  // event after which the prompt is due
  TakeoverPrompt prompt;
  // Every condition that held, before the two-reason cap.
  std::vector<TakeoverCondition> held;
};

// Offline reference for takeover detection. Walks the log and, at every
// evaluation point, re-derives the silence clock and both windows from the
// raw events by scanning backwards to the latest control change. Recorded
// takeover_prompt events are ignored. Shares no logic with the online
// detector.
//
// Throws Error(kCorruptLog) on structurally invalid logs.
std::vector<OracleFinding> oracle_scan_detailed(const SessionLog& log,
                                                const DetectorConfig& config);

std::vector<TakeoverPrompt> oracle_scan(const SessionLog& log, const DetectorConfig& config);

// The takeover_prompt events the online detector wrote into the log.
std::vector<TakeoverPrompt> recorded_prompts(const SessionLog& log);

}  // namespace semiauto::sim
