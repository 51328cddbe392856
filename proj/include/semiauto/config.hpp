#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "semiauto/detector.hpp"
#include "semiauto/dialogue.hpp"

namespace semiauto {

struct ServerConfig {
  Millis tick_ms = 250;
  // Control reverts to the agent this long after the operator disconnects
  // while holding control.
  Millis operator_grace_ms = 5000;
  // Speaking-time proxy for typed or scripted operator speech.
  Millis operator_ms_per_char = 60;
  // Operator-facing explanation per takeover condition.
  std::map<TakeoverCondition, std::string> reason_text{
      {TakeoverCondition::kLongSilence, "The user has been silent for too long."},
      {TakeoverCondition::kShortTurns, "The user's last turns were very short."},
      {TakeoverCondition::kConsecutiveFormulaic,
       "The agent has given several formulaic responses in a row."},
      {TakeoverCondition::kNoSentimentOrQuestion,
       "Recent agent responses had no sentiment or elaborating question."},
  };

  void validate() const;

  bool operator==(const ServerConfig&) const = default;
};

struct Config {
  DialogueConfig dialogue;
  DetectorConfig detector;
  ServerConfig server;

  // Throws Error(kConfig).
  void validate() const;

  bool operator==(const Config&) const = default;
};

// Sections: dialogue, detector, server, pools. Missing keys take defaults;
// unknown keys are rejected with Error(kConfig).
Config config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const Config& config);

Config load_config(const std::filesystem::path& path);

}  // namespace semiauto
