#include "semiauto/sim.hpp"

#include <array>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "semiauto/error.hpp"

namespace semiauto::sim {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void script_error(std::size_t index, const std::string& why) {
  throw Error(ErrorCode::kScript, "step " + std::to_string(index) + ": " + why);
}

constexpr std::array<std::string_view, 24> kFiller = {
    "so", "we", "went", "there", "and", "then", "it", "was", "really", "quite",
    "after", "that", "I", "think", "maybe", "just", "very", "the", "a", "also",
    "kind", "of", "like", "yesterday"};

struct TopicWord {
  std::string_view word;
  std::string_view category;
};

constexpr std::array<TopicWord, 15> kTopics = {{
    {"ramen", "food"},      {"pasta", "food"},        {"sushi", "food"},
    {"curry", "food"},      {"Kyoto", "place"},       {"Osaka", "place"},
    {"beach", "place"},     {"museum", "place"},      {"hiking", "activity"},
    {"cycling", "activity"}, {"swimming", "activity"}, {"train", ""},
    {"bike", ""},           {"weather", ""},          {"festival", ""},
}};

constexpr std::array<std::string_view, 6> kOperatorLines = {
    "Tell me more about the beach", "That sounds lovely", "What happened next?",
    "Oh really?", "How did that make you feel?", "ok"};

}  // namespace

void validate_script(const Script& script) {
  Millis last = 0;
  bool in_control = false;
  bool ended = false;
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& s = script.steps[i];
    if (ended) script_error(i, "step after session_end");
    if (s.t_ms < last) script_error(i, "time goes backwards");
    if (s.t_ms < 0) script_error(i, "negative time");
    last = s.t_ms;
    switch (s.kind) {
      case EventKind::kUtterance:
      case EventKind::kEndOfTurn:
        if (s.actor != Actor::kUser) script_error(i, "utterances come from the user");
        break;
      case EventKind::kControlChange:
        if (s.actor != Actor::kOperator) script_error(i, "only the operator toggles control");
        in_control = !in_control;
        break;
      case EventKind::kResponse:
        if (s.actor != Actor::kOperator) script_error(i, "only operator speech is scripted");
        if (!in_control) script_error(i, "operator speech outside a takeover");
        break;
      case EventKind::kExpression:
        if (s.actor != Actor::kOperator) script_error(i, "expressions come from the operator");
        if (!in_control) script_error(i, "expression outside a takeover");
        break;
      case EventKind::kSilenceTick:
        break;
      case EventKind::kSessionEnd:
        ended = true;
        break;
      default:
        script_error(i, "kind '" + std::string(to_string(s.kind)) + "' cannot be scripted");
    }
  }
}

Script parse_script(const std::string& jsonl) {
  Script script;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t index = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      script_error(index, std::string("unparseable line: ") + e.what());
    }
    if (!j.is_object()) script_error(index, "line is not an object");
    if (j.value("kind", "") == "session_start") {
      if (!first) script_error(index, "session_start must be the first line");
      const auto payload = j.value("payload", json::object());
      script.session_id = payload.value("session_id", script.session_id);
      if (payload.contains("session_length_ms")) {
        script.session_length_ms = payload.at("session_length_ms").get<Millis>();
      }
      first = false;
      continue;
    }
    first = false;
    if (!j.contains("seq")) j["seq"] = 0;
    if (!j.contains("t_ms")) script_error(index, "missing t_ms");
    if (!j.contains("payload")) j["payload"] = json::object();
    auto& payload = j["payload"];
    const std::string kind = j.value("kind", "");
    if (kind == "utterance") {
      if (!payload.contains("start_ms")) payload["start_ms"] = j["t_ms"];
      if (!payload.contains("annotations")) payload["annotations"] = json::array();
    } else if (kind == "response") {
      if (!payload.contains("kind")) payload["kind"] = "operator_speech";
      if (!payload.contains("has_sentiment")) payload["has_sentiment"] = false;
    } else if (kind == "control_change") {
      if (!payload.contains("target")) payload["target"] = "operator";
    }
    try {
      script.steps.push_back(decode_event(j.dump()));
    } catch (const Error& e) {
      script_error(index, e.what());
    }
    ++index;
  }
  validate_script(script);
  return script;
}

Script read_script_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kScript, "cannot open script " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_script(buffer.str());
}

std::string serialize_script(const Script& script) {
  ordered_json header;
  header["kind"] = "session_start";
  header["payload"]["session_id"] = script.session_id;
  if (script.session_length_ms) header["payload"]["session_length_ms"] = *script.session_length_ms;
  std::string out = header.dump() + "\n";
  for (const auto& step : script.steps) {
    out += encode_event(step);
    out += '\n';
  }
  return out;
}

SessionLog run_script(const Script& script, const Config& config) {
  validate_script(script);
  SessionEngine engine(script.session_id, config);
  engine.start(0);

  const Millis tick = config.server.tick_ms;
  Millis next_tick = tick;
  Millis end = script.session_length_ms.value_or(0);

  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& step = script.steps[i];
    while (next_tick < step.t_ms) {
      engine.tick(next_tick);
      next_tick += tick;
    }
    end = std::max(end, step.t_ms);
    if (step.kind == EventKind::kSessionEnd) {
      end = step.t_ms;
      break;
    }
    if (step.kind == EventKind::kSilenceTick) continue;
    try {
      engine.apply(step);
    } catch (const Error& e) {
      script_error(i, e.what());
    }
  }
  while (next_tick <= end) {
    engine.tick(next_tick);
    next_tick += tick;
  }
  engine.end(end);
  return engine.log();
}

Script generate_script(std::uint64_t seed, const FuzzOptions& o) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](Millis lo, Millis hi) {
    return std::uniform_int_distribution<Millis>(lo, hi)(rng);
  };
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  Script script;
  script.session_id = "fuzz-" + std::to_string(seed);
  const Millis length = uniform(o.min_length_ms, o.max_length_ms);
  script.session_length_ms = length;

  auto user_utterance = [&](Millis start) {
    const std::size_t words = chance(o.short_utterance_probability)
                                  ? 1 + pick(3)
                                  : 1 + pick(std::max<std::size_t>(o.max_words, 1));
    std::vector<std::string> tokens;
    std::optional<TopicWord> topic;
    for (std::size_t w = 0; w < words; ++w) {
      if (!topic && chance(0.3)) {
        topic = kTopics[pick(kTopics.size())];
        tokens.emplace_back(topic->word);
      } else {
        tokens.emplace_back(kFiller[pick(kFiller.size())]);
      }
    }
    UserUtterance u;
    for (std::size_t w = 0; w < tokens.size(); ++w) {
      if (w) u.text += ' ';
      u.text += tokens[w];
    }
    u.text += '.';
    u.session_time_ms = start;
    u.end_time_ms = start + static_cast<Millis>(words) * uniform(150, 350);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    if (chance(o.focus_probability)) {
      Annotation a;
      a.kind = AnnotationKind::kFocusWord;
      a.confidence = conf(rng);
      if (topic) {
        a.value = std::string(topic->word);
        if (!topic->category.empty() && chance(0.8)) a.category = std::string(topic->category);
      } else {
        a.value = tokens[pick(tokens.size())];
      }
      u.annotations.push_back(std::move(a));
    }
    if (chance(o.sentiment_probability)) {
      Annotation a;
      a.kind = AnnotationKind::kSentiment;
      a.value = chance(0.6) ? "positive" : "negative";
      a.confidence = conf(rng);
      u.annotations.push_back(std::move(a));
    }
    return u;
  };

  Millis t = uniform(0, 3000);
  while (t < length) {
    if (chance(o.takeover_probability)) {
      script.steps.push_back(events::operator_toggle(t));
      const auto says = pick(4);
      for (std::size_t k = 0; k < says; ++k) {
        t += uniform(200, 2500);
        std::optional<Expression> expression;
        if (chance(0.4)) expression = kAllExpressions[pick(kAllExpressions.size())];
        const std::string line(kOperatorLines[pick(kOperatorLines.size())]);
        script.steps.push_back(events::operator_speech(
            t, line, expression, static_cast<Millis>(line.size()) * uniform(40, 90)));
        if (chance(0.2)) {
          script.steps.push_back(
              events::operator_expression(t, kAllExpressions[pick(kAllExpressions.size())]));
        }
        if (chance(o.user_during_takeover_probability)) {
          auto u = user_utterance(t + uniform(100, 800));
          t = u.end_time_ms;
          script.steps.push_back(events::user_utterance(t, u));
          if (chance(0.5)) script.steps.push_back(events::end_of_turn(t + uniform(0, 300)));
          t = script.steps.back().t_ms;
        }
      }
      t += uniform(300, 6000);
      script.steps.push_back(events::operator_toggle(t));
      t += uniform(0, 2000);
      continue;
    }

    const auto parts = 1 + pick(3);
    for (std::size_t k = 0; k < parts; ++k) {
      auto u = user_utterance(t);
      t = u.end_time_ms;
      script.steps.push_back(events::user_utterance(t, u));
      if (k + 1 < parts) t += uniform(100, 1200);
    }
    t += uniform(0, 300);
    script.steps.push_back(events::end_of_turn(t));
    if (chance(o.long_gap_probability)) {
      t += chance(0.6) ? uniform(3000, 7000) : uniform(7000, 16000);
    } else {
      t += uniform(200, 3000);
    }
  }
  return script;
}

}  // namespace semiauto::sim
