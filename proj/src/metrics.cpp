#include "semiauto/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "semiauto/error.hpp"

namespace semiauto::sim {

SessionMetrics compute_metrics(const SessionLog& log) {
  SessionMetrics m;
  m.session_id = log.session_id;
  for (auto c : kAllConditions) m.per_condition_prompt_counts[c] = 0;
  const auto& ev = log.events;
  if (ev.empty()) return m;
  m.session_length_ms = ev.back().t_ms - ev.front().t_ms;
  const Millis session_end = ev.back().t_ms;

  std::optional<Millis> control_since;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (e.kind == EventKind::kControlChange) {
      if (e.as<ControlPayload>().target == ControlMode::kOperator) {
        ++m.takeover_count;
        control_since = e.t_ms;
      } else if (control_since) {
        m.operator_control_ms += e.t_ms - *control_since;
        control_since.reset();
      }
    } else if (e.kind == EventKind::kTakeoverPrompt) {
      ++m.prompt_count;
      for (auto r : e.as<PromptPayload>().reasons) ++m.per_condition_prompt_counts[r];
    } else if (e.kind == EventKind::kResponse && e.actor == Actor::kOperator) {
      Millis stop = e.t_ms + e.as<ResponsePayload>().duration_ms.value_or(0);
      for (std::size_t j = i + 1; j < ev.size(); ++j) {
        const auto& later = ev[j];
        if (later.kind == EventKind::kControlChange ||
            (later.kind == EventKind::kResponse && later.actor == Actor::kOperator)) {
          stop = std::min(stop, later.t_ms);
          break;
        }
      }
      stop = std::min(stop, session_end);
      m.operator_speech_ms += std::max<Millis>(0, stop - e.t_ms);
    }
  }
  if (control_since) m.operator_control_ms += session_end - *control_since;
  if (m.takeover_count > 0) {
    m.mean_speech_ms_per_takeover =
        static_cast<double>(m.operator_speech_ms) / static_cast<double>(m.takeover_count);
  }
  return m;
}

CorpusSummary summarize(std::span<const SessionMetrics> metrics) {
  if (metrics.empty()) throw Error(ErrorCode::kEmptyInput, "no sessions to summarize");
  std::vector<std::int64_t> counts;
  counts.reserve(metrics.size());
  std::int64_t speech = 0;
  std::int64_t takeovers = 0;
  for (const auto& m : metrics) {
    counts.push_back(m.takeover_count);
    speech += m.operator_speech_ms;
    takeovers += m.takeover_count;
  }
  std::sort(counts.begin(), counts.end());
  const std::size_t n = counts.size();

  CorpusSummary s;
  s.sessions = n;
  s.min_takeovers = counts.front();
  s.max_takeovers = counts.back();
  // Integer sums keep these exact; only the final division rounds.
  s.median_takeovers = n % 2 ? static_cast<double>(counts[n / 2])
                             : static_cast<double>(counts[n / 2 - 1] + counts[n / 2]) / 2.0;
  s.mean_operator_speech_ms = static_cast<double>(speech) / static_cast<double>(n);
  s.mean_speech_ms_per_takeover =
      takeovers ? static_cast<double>(speech) / static_cast<double>(takeovers) : 0.0;
  return s;
}

nlohmann::ordered_json to_json(const SessionMetrics& m) {
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [c, count] : m.per_condition_prompt_counts) {
    per[std::string(to_string(c))] = count;
  }
  return {
      {"session_id", m.session_id},
      {"takeover_count", m.takeover_count},
      {"operator_speech_ms", m.operator_speech_ms},
      {"operator_control_ms", m.operator_control_ms},
      {"prompt_count", m.prompt_count},
      {"per_condition_prompt_counts", per},
      {"mean_speech_ms_per_takeover", m.mean_speech_ms_per_takeover},
      {"session_length_ms", m.session_length_ms},
  };
}

nlohmann::ordered_json to_json(const CorpusSummary& s) {
  return {
      {"sessions", s.sessions},
      {"median_takeovers", s.median_takeovers},
      {"min_takeovers", s.min_takeovers},
      {"max_takeovers", s.max_takeovers},
      {"mean_operator_speech_ms", s.mean_operator_speech_ms},
      {"mean_speech_ms_per_takeover", s.mean_speech_ms_per_takeover},
  };
}

}  // namespace semiauto::sim
