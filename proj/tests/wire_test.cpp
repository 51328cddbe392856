#include <random>

#include "doctest.h"
#include "semiauto/error.hpp"
#include "semiauto/oracle.hpp"
#include "semiauto/wire.hpp"
#include "support.hpp"

using namespace semiauto;
using namespace semiauto::wire;
using nlohmann::ordered_json;

namespace {

WireMessage msg(std::string type, ordered_json body = ordered_json::object(),
                std::string session = "s1") {
  return WireMessage{std::move(type), std::move(session), 0, std::move(body)};
}

std::vector<Outbound> only(const std::vector<Outbound>& out, const std::string& type) {
  std::vector<Outbound> r;
  for (const auto& o : out) {
    if (o.message.type == type) r.push_back(o);
  }
  return r;
}

std::string error_code(const std::vector<Outbound>& out) {
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].message.type == "error");
  return out[0].message.body.at("code").get<std::string>();
}

}  // namespace

TEST_CASE("frames round-trip") {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 500; ++i) {
    WireMessage m;
    m.type = std::string(kMessageTypes[gen() % std::size(kMessageTypes)]);
    m.session_id = "sess-" + std::to_string(gen() % 1000);
    m.t_ms = static_cast<Millis>(gen() % 10'000'000);
    m.body["z"] = static_cast<int>(gen() % 100);
    m.body["a"] = "text \xE3\x81\x82 \"quoted\"";
    m.body["list"] = ordered_json::array({1, 2.5, true, nullptr});
    const auto text = encode(m);
    CHECK(decode(text) == m);
    CHECK(encode(decode(text)) == text);
  }
}

TEST_CASE("frame schema errors") {
  auto schema_error = [](const std::string& text) {
    try {
      decode(text);
    } catch (const Error& e) {
      return e.code() == ErrorCode::kSchema;
    }
    return false;
  };
  CHECK(schema_error("nope"));
  CHECK(schema_error(R"({"type":"teleport","session_id":"s"})"));
  CHECK(schema_error(R"({"type":"end_of_turn"})"));
  CHECK(schema_error(R"({"type":"end_of_turn","session_id":"s","body":[]})"));
  CHECK(schema_error(R"({"type":"end_of_turn","session_id":"s","extra":1})"));
  CHECK(schema_error(R"({"type":"end_of_turn","session_id":"s","t_ms":1.5})"));
  CHECK_NOTHROW(decode(R"({"type":"end_of_turn","session_id":"s"})"));
}

TEST_CASE("user turn fans out: echo to operator, answer to both") {
  SessionChannel ch("s1", Config{});
  auto hello = ch.open(0);
  REQUIRE(hello.size() == 1);
  CHECK(hello[0].message.type == "session_start");
  CHECK(hello[0].to == Recipient::kBoth);

  ordered_json body;
  body["text"] = "I went for a really fun trip";
  body["annotations"] = ordered_json::array(
      {{{"kind", "sentiment"}, {"value", "positive"}, {"confidence", 0.9}}});
  auto said = ch.handle_inbound(Endpoint::kUser, msg("user_utterance", body), 1000);
  REQUIRE(said.size() == 1);
  CHECK(said[0].to == Recipient::kOperator);
  CHECK(said[0].message.body.at("text") == "I went for a really fun trip");

  auto done = ch.handle_inbound(Endpoint::kUser, msg("end_of_turn"), 1200);
  auto answers = only(done, "agent_response");
  REQUIRE(answers.size() == 1);
  CHECK(answers[0].to == Recipient::kBoth);
  CHECK(answers[0].message.body.at("kind") == "assessment");
  CHECK(answers[0].message.body.at("speaker") == "agent");
  CHECK(answers[0].message.body.at("expression") == "happy");
}

TEST_CASE("silence updates and prompts reach the operator only") {
  SessionChannel ch("s1", Config{});
  ch.open(0);
  std::vector<Outbound> all;
  for (Millis t = 250; t <= 4250; t += 250) {
    auto out = ch.tick(t);
    all.insert(all.end(), out.begin(), out.end());
    auto updates = only(out, "silence_update");
    REQUIRE(updates.size() == 1);
    CHECK(updates[0].message.body.at("silence_ms") == t);
    CHECK(updates[0].message.body.at("threshold_ms") == 4000);
  }
  auto prompts = only(all, "takeover_prompt");
  REQUIRE(prompts.size() == 1);
  CHECK(prompts[0].message.t_ms == 4250);
  const auto& reasons = prompts[0].message.body.at("reasons");
  REQUIRE(reasons.size() == 1);
  CHECK(reasons[0].at("code") == "long_silence");
  CHECK(reasons[0].at("text") ==
        Config{}.server.reason_text.at(TakeoverCondition::kLongSilence));
  for (const auto& o : all) {
    if (o.message.type == "silence_update" || o.message.type == "takeover_prompt") {
      CHECK_FALSE(o.reaches(Endpoint::kUser));
      CHECK(o.reaches(Endpoint::kOperator));
    }
  }
}

TEST_CASE("silence 3900 ms gives an update only") {
  SessionChannel ch("s1", Config{});
  ch.open(0);
  auto out = ch.tick(3900);
  REQUIRE(out.size() == 1);
  CHECK(out[0].message.type == "silence_update");
  CHECK(out[0].message.body.at("silence_ms") == 3900);
}

TEST_CASE("operator takeover and speech") {
  SessionChannel ch("s1", Config{});
  ch.open(0);
  auto toggled = ch.handle_inbound(Endpoint::kOperator, msg("control_change"), 500);
  REQUIRE(toggled.size() == 1);
  CHECK(toggled[0].to == Recipient::kBoth);
  CHECK(toggled[0].message.body.at("mode") == "operator");

  ordered_json body;
  body["text"] = "Tell me more about the beach";
  body["expression"] = "happy";
  auto spoke = ch.handle_inbound(Endpoint::kOperator, msg("operator_utterance", body), 900);
  REQUIRE(spoke.size() == 2);
  CHECK(spoke[0].message.type == "agent_response");
  CHECK(spoke[0].message.body.at("kind") == "operator_speech");
  CHECK(spoke[0].message.body.at("speaker") == "operator");
  CHECK(spoke[0].reaches(Endpoint::kUser));
  CHECK(spoke[1].message.type == "expression");
  CHECK(spoke[1].message.t_ms == spoke[0].message.t_ms);

  auto back = ch.handle_inbound(Endpoint::kOperator, msg("control_change"), 2000);
  CHECK(back[0].message.body.at("mode") == "agent");
}

TEST_CASE("inbound errors go to the sender and keep the session") {
  SessionChannel ch("s1", Config{});
  ch.open(0);
  CHECK(error_code(ch.handle_inbound(Endpoint::kOperator,
                                     msg("operator_utterance", {{"text", "hi"}}), 10)) ==
        "not_in_control");
  auto wrong = ch.handle_inbound(Endpoint::kUser, msg("end_of_turn", {}, "other"), 10);
  CHECK(error_code(wrong) == "no_such_session");
  CHECK(wrong[0].to == Recipient::kUser);
  CHECK(error_code(ch.handle_inbound(Endpoint::kUser, msg("user_utterance", {{"txt", "x"}}), 10)) ==
        "schema");
  CHECK(error_code(ch.handle_inbound(Endpoint::kUser, msg("control_change"), 10)) == "schema");
  CHECK(error_code(ch.handle_inbound(Endpoint::kUser, msg("user_utterance", {{"text", "  "}}),
                                     10)) == "malformed_input");
  CHECK(error_code(ch.handle_inbound(Endpoint::kOperator, msg("expression", {{"expression", "smug"}}),
                                     10)) == "schema");
  // Still usable.
  CHECK(ch.handle_inbound(Endpoint::kUser, msg("user_utterance", {{"text", "hello"}}), 20).size() ==
        1);
  CHECK(ch.engine().state().last_seq == 2);
}

TEST_CASE("time is monotonic even when the wall clock is not") {
  SessionChannel ch("s1", Config{});
  ch.open(0);
  ch.tick(1000);
  auto out = ch.handle_inbound(Endpoint::kUser, msg("user_utterance", {{"text", "hi"}}), 900);
  CHECK(out[0].message.t_ms == 1000);
}

TEST_CASE("operator disconnect reverts control after the grace period") {
  SessionChannel ch("s1", Config{});
  ch.open(0);
  ch.handle_inbound(Endpoint::kOperator, msg("control_change"), 100);
  ch.operator_disconnected(1000);
  CHECK(ch.tick(5999).size() == 1);  // silence_update only
  auto out = ch.tick(6000);
  auto changes = only(out, "control_change");
  REQUIRE(changes.size() == 1);
  CHECK(changes[0].message.body.at("mode") == "agent");
  CHECK(changes[0].message.body.at("cause") == "operator_disconnect");
  CHECK(ch.engine().state().mode == ControlMode::kAgent);
}

TEST_CASE("operator reconnect within the grace period keeps control") {
  SessionChannel ch("s1", Config{});
  ch.open(0);
  ch.handle_inbound(Endpoint::kOperator, msg("control_change"), 100);
  ch.operator_disconnected(1000);
  ch.operator_connected();
  ch.tick(9000);
  CHECK(ch.engine().state().mode == ControlMode::kOperator);
}

TEST_CASE("user session_end closes the session") {
  SessionChannel ch("s1", Config{});
  ch.open(0);
  auto out = ch.handle_inbound(Endpoint::kUser, msg("session_end"), 50);
  REQUIRE(out.size() == 1);
  CHECK(out[0].message.type == "session_end");
  CHECK(out[0].to == Recipient::kBoth);
  CHECK(ch.ended());
  CHECK(ch.tick(100).empty());
}

TEST_CASE("channel state equals replay of its log") {
  std::mt19937_64 gen(77);
  for (int run = 0; run < 30; ++run) {
    SessionChannel ch("s1", Config{});
    ch.open(0);
    Millis t = 0;
    for (int step = 0; step < 200; ++step) {
      t += static_cast<Millis>(gen() % 700);
      switch (gen() % 6) {
        case 0:
          ch.handle_inbound(Endpoint::kUser, msg("user_utterance", {{"text", "we went there"}}), t);
          break;
        case 1:
          ch.handle_inbound(Endpoint::kUser, msg("end_of_turn"), t);
          break;
        case 2:
          ch.handle_inbound(Endpoint::kOperator, msg("control_change"), t);
          break;
        case 3:
          ch.handle_inbound(Endpoint::kOperator, msg("operator_utterance", {{"text", "really?"}}), t);
          break;
        default:
          ch.tick(t);
      }
    }
    ch.close(t + 1);
    const auto replayed = append_and_replay(ch.engine().log());
    CHECK(replayed.state == ch.engine().state());
    CHECK(sim::oracle_scan(ch.engine().log(), Config{}.detector) ==
          sim::recorded_prompts(ch.engine().log()));
  }
}
