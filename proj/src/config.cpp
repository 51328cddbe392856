#include "semiauto/config.hpp"

#include <fstream>
#include <set>

#include "semiauto/error.hpp"

namespace semiauto {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown(const json& section, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!section.is_object()) throw Error(ErrorCode::kConfig, where + " must be an object");
  for (const auto& [key, _] : section.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::kConfig, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& section, const char* key, T& out, const std::string& where) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kConfig, std::string("bad value for '") + key + "' in " + where);
  }
}

void read_size(const json& section, const char* key, std::size_t& out, const std::string& where) {
  if (!section.contains(key)) return;
  const auto& v = section.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorCode::kConfig, std::string("bad value for '") + key + "' in " + where);
  }
  out = v.get<std::size_t>();
}

}  // namespace

void ServerConfig::validate() const {
  if (tick_ms <= 0) throw Error(ErrorCode::kConfig, "tick_ms must be > 0");
  if (operator_grace_ms < 0) throw Error(ErrorCode::kConfig, "operator_grace_ms must be >= 0");
  if (operator_ms_per_char < 0) {
    throw Error(ErrorCode::kConfig, "operator_ms_per_char must be >= 0");
  }
  for (auto c : kAllConditions) {
    if (!reason_text.count(c)) {
      throw Error(ErrorCode::kConfig,
                  "reason_text missing entry for " + std::string(to_string(c)));
    }
  }
}

void Config::validate() const {
  dialogue.validate();
  detector.validate();
  server.validate();
}

Config config_from_json(const json& j) {
  Config c;
  reject_unknown(j, {"dialogue", "detector", "server", "pools"}, "config");

  if (j.contains("dialogue")) {
    const auto& d = j.at("dialogue");
    reject_unknown(d, {"asr_confidence_min", "silence_prompt_ms", "backchannel_pause_ms",
                       "rng_seed"},
                   "dialogue");
    read(d, "asr_confidence_min", c.dialogue.asr_confidence_min, "dialogue");
    read(d, "silence_prompt_ms", c.dialogue.silence_prompt_ms, "dialogue");
    read(d, "backchannel_pause_ms", c.dialogue.backchannel_pause_ms, "dialogue");
    read(d, "rng_seed", c.dialogue.rng_seed, "dialogue");
  }

  if (j.contains("detector")) {
    const auto& d = j.at("detector");
    reject_unknown(d, {"silence_takeover_ms", "short_turn_chars", "short_turn_count",
                       "formulaic_run", "starvation_window", "prompt_cooldown_ms"},
                   "detector");
    read(d, "silence_takeover_ms", c.detector.silence_takeover_ms, "detector");
    read_size(d, "short_turn_chars", c.detector.short_turn_chars, "detector");
    read_size(d, "short_turn_count", c.detector.short_turn_count, "detector");
    read_size(d, "formulaic_run", c.detector.formulaic_run, "detector");
    read_size(d, "starvation_window", c.detector.starvation_window, "detector");
    read(d, "prompt_cooldown_ms", c.detector.prompt_cooldown_ms, "detector");
  }

  if (j.contains("server")) {
    const auto& s = j.at("server");
    reject_unknown(s, {"tick_ms", "operator_grace_ms", "operator_ms_per_char", "reason_text"},
                   "server");
    read(s, "tick_ms", c.server.tick_ms, "server");
    read(s, "operator_grace_ms", c.server.operator_grace_ms, "server");
    read(s, "operator_ms_per_char", c.server.operator_ms_per_char, "server");
    if (s.contains("reason_text")) {
      const auto& table = s.at("reason_text");
      if (!table.is_object()) throw Error(ErrorCode::kConfig, "reason_text must be an object");
      for (const auto& [code, text] : table.items()) {
        auto cond = parse_condition(code);
        if (!cond || !text.is_string()) {
          throw Error(ErrorCode::kConfig, "bad reason_text entry '" + code + "'");
        }
        c.server.reason_text[*cond] = text.get<std::string>();
      }
    }
  }

  if (j.contains("pools")) {
    const auto& p = j.at("pools");
    reject_unknown(p, {"formulaic", "assessment_positive", "assessment_negative",
                       "question_templates", "repeat_templates", "exploratory_questions",
                       "backchannel_formal", "backchannel_reactive"},
                   "pools");
    auto& pools = c.dialogue.pools;
    read(p, "formulaic", pools.formulaic, "pools");
    read(p, "assessment_positive", pools.assessment_positive, "pools");
    read(p, "assessment_negative", pools.assessment_negative, "pools");
    read(p, "repeat_templates", pools.repeat_templates, "pools");
    read(p, "exploratory_questions", pools.exploratory_questions, "pools");
    read(p, "backchannel_formal", pools.backchannel_formal, "pools");
    read(p, "backchannel_reactive", pools.backchannel_reactive, "pools");
    if (p.contains("question_templates")) {
      const auto& list = p.at("question_templates");
      if (!list.is_array()) throw Error(ErrorCode::kConfig, "question_templates must be a list");
      pools.question_templates.clear();
      for (const auto& entry : list) {
        reject_unknown(entry, {"text", "category"}, "question_templates entry");
        QuestionTemplate q;
        read(entry, "text", q.text, "question_templates entry");
        read(entry, "category", q.category, "question_templates entry");
        pools.question_templates.push_back(std::move(q));
      }
    }
  }

  c.validate();
  return c;
}

ordered_json config_to_json(const Config& c) {
  ordered_json j;
  j["dialogue"] = {
      {"asr_confidence_min", c.dialogue.asr_confidence_min},
      {"silence_prompt_ms", c.dialogue.silence_prompt_ms},
      {"backchannel_pause_ms", c.dialogue.backchannel_pause_ms},
      {"rng_seed", c.dialogue.rng_seed},
  };
  j["detector"] = {
      {"silence_takeover_ms", c.detector.silence_takeover_ms},
      {"short_turn_chars", c.detector.short_turn_chars},
      {"short_turn_count", c.detector.short_turn_count},
      {"formulaic_run", c.detector.formulaic_run},
      {"starvation_window", c.detector.starvation_window},
      {"prompt_cooldown_ms", c.detector.prompt_cooldown_ms},
  };
  ordered_json reasons = ordered_json::object();
  for (auto cond : kAllConditions) {
    reasons[std::string(to_string(cond))] = c.server.reason_text.at(cond);
  }
  j["server"] = {
      {"tick_ms", c.server.tick_ms},
      {"operator_grace_ms", c.server.operator_grace_ms},
      {"operator_ms_per_char", c.server.operator_ms_per_char},
      {"reason_text", reasons},
  };
  const auto& p = c.dialogue.pools;
  ordered_json questions = ordered_json::array();
  for (const auto& q : p.question_templates) {
    questions.push_back({{"text", q.text}, {"category", q.category}});
  }
  j["pools"] = {
      {"formulaic", p.formulaic},
      {"assessment_positive", p.assessment_positive},
      {"assessment_negative", p.assessment_negative},
      {"question_templates", questions},
      {"repeat_templates", p.repeat_templates},
      {"exploratory_questions", p.exploratory_questions},
      {"backchannel_formal", p.backchannel_formal},
      {"backchannel_reactive", p.backchannel_reactive},
  };
  return j;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace semiauto
