#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "semiauto/dialogue.hpp"
#include "semiauto/error.hpp"
#include "support.hpp"

using namespace semiauto;
using testing_support::focus;
using testing_support::sentiment;
using testing_support::utterance;

namespace {

bool contains(const std::vector<std::string>& pool, const std::string& s) {
  return std::find(pool.begin(), pool.end(), s) != pool.end();
}

DialogueConfig single_question(std::string tmpl, std::string category = "") {
  DialogueConfig c;
  c.pools.question_templates = {{std::move(tmpl), std::move(category)}};
  return c;
}

}  // namespace

TEST_CASE("positive sentiment yields an assessment") {
  DialogueConfig config;
  RngState rng(0);
  auto u = utterance("I went for a really fun week-long trip to the Philippines",
                     {sentiment("positive", 0.9)});
  auto r = select_response(u, config, rng);
  CHECK(r.kind == ResponseKind::kAssessment);
  CHECK(r.has_sentiment);
  CHECK(r.expression == Expression::kHappy);
  CHECK(contains(config.pools.assessment_positive, r.text));

  config.pools.assessment_positive = {"That's great!"};
  RngState fresh(0);
  CHECK(select_response(u, config, fresh).text == "That's great!");
}

TEST_CASE("negative sentiment draws from the negative pool") {
  DialogueConfig config;
  RngState rng(3);
  auto r = select_response(utterance("I lost my wallet", {sentiment("negative", 0.7)}), config,
                           rng);
  CHECK(r.kind == ResponseKind::kAssessment);
  CHECK(r.expression == Expression::kSad);
  CHECK(contains(config.pools.assessment_negative, r.text));
}

TEST_CASE("focus word with a matching template yields an elaborating question") {
  auto config = single_question("What type of {X} did you eat?");
  RngState rng(0);
  auto r = select_response(utterance("yesterday I ate ramen", {focus("ramen", 0.9)}), config, rng);
  CHECK(r.kind == ResponseKind::kElaboratingQuestion);
  CHECK(r.text == "What type of ramen did you eat?");
  CHECK_FALSE(r.has_sentiment);
}

TEST_CASE("category tags select question templates") {
  auto config = single_question("What type of {X} did you eat?", "food");
  RngState rng(0);
  auto tagged = select_response(utterance("I ate ramen", {focus("ramen", 0.9, "food")}), config,
                                rng);
  CHECK(tagged.kind == ResponseKind::kElaboratingQuestion);
  // Untagged words match only generic templates.
  auto untagged = select_response(utterance("I ate ramen", {focus("ramen", 0.9)}), config, rng);
  CHECK(untagged.kind == ResponseKind::kRepeatedResponse);
  auto other = select_response(utterance("I saw Kyoto", {focus("Kyoto", 0.9, "place")}), config,
                               rng);
  CHECK(other.kind == ResponseKind::kRepeatedResponse);
}

TEST_CASE("focus word without a template yields a repeat") {
  DialogueConfig config;
  config.pools.repeat_templates = {"A {X}..."};
  RngState rng(0);
  auto r = select_response(utterance("I took a train", {focus("train", 0.9)}), config, rng);
  CHECK(r.kind == ResponseKind::kRepeatedResponse);
  CHECK(r.text == "A train...");
}

TEST_CASE("no annotations falls back to formulaic") {
  DialogueConfig config;
  RngState rng(0);
  auto r = select_response(utterance("hmm well"), config, rng);
  CHECK(r.kind == ResponseKind::kFormulaic);
  CHECK(contains(config.pools.formulaic, r.text));
  CHECK_FALSE(r.has_sentiment);
}

TEST_CASE("confidence gate") {
  DialogueConfig config;
  RngState rng(0);
  CHECK(select_response(utterance("a train", {focus("train", 0.3)}), config, rng).kind ==
        ResponseKind::kFormulaic);
  CHECK(select_response(utterance("a train", {sentiment("positive", 0.49)}), config, rng).kind ==
        ResponseKind::kFormulaic);
  // The gate is inclusive.
  CHECK(select_response(utterance("a train", {focus("train", 0.5)}), config, rng).kind ==
        ResponseKind::kRepeatedResponse);
}

TEST_CASE("responses are stamped with the utterance end") {
  DialogueConfig config;
  RngState rng(0);
  CHECK(select_response(utterance("hello", {}, 100, 900), config, rng).session_time_ms == 900);
}

TEST_CASE("malformed utterances are rejected") {
  DialogueConfig config;
  RngState rng(0);
  auto expect_malformed = [&](const UserUtterance& u) {
    try {
      select_response(u, config, rng);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMalformedInput);
    }
  };
  expect_malformed(utterance("   "));
  expect_malformed(utterance("\xE3\x80\x80"));
  expect_malformed(utterance("hello", {}, 10, 5));
  expect_malformed(utterance("hello", {focus("ramen", 0.9)}));
  expect_malformed(utterance("hello", {focus("hello", 1.5)}));
  expect_malformed(utterance("hello", {sentiment("neutral", 0.9)}));
}

TEST_CASE("selection is deterministic per seed") {
  DialogueConfig config;
  auto run = [&](std::uint64_t seed) {
    RngState rng(seed);
    std::string all;
    for (int i = 0; i < 50; ++i) all += select_response(utterance("fine"), config, rng).text + "|";
    return all;
  };
  CHECK(run(11) == run(11));
  CHECK(run(11) != run(12));
}

TEST_CASE("pool draws never repeat back to back") {
  DialogueConfig config;
  RngState rng(5);
  std::string previous;
  std::set<std::string> seen;
  for (int i = 0; i < 2000; ++i) {
    auto text = select_response(utterance("fine"), config, rng).text;
    CHECK(text != previous);
    previous = text;
    seen.insert(text);
  }
  CHECK(seen.size() == config.pools.formulaic.size());
}

TEST_CASE("single-entry pools still draw") {
  RngState rng(1);
  CHECK(rng.draw(Pool::kFormulaic, 1) == 0);
  CHECK(rng.draw(Pool::kFormulaic, 1) == 0);
}

TEST_CASE("backchannel decisions") {
  DialogueConfig config;
  RngState rng(0);
  auto plain = utterance("so we went", {}, 0, 1000);
  auto b = backchannel_decision(450, plain, config, rng);
  REQUIRE(b);
  CHECK(b->kind == ResponseKind::kBackchannelFormal);
  CHECK_FALSE(b->has_sentiment);
  CHECK(contains(config.pools.backchannel_formal, b->text));

  auto moved = utterance("it was amazing", {sentiment("positive", 0.8)}, 0, 1000);
  auto r = backchannel_decision(450, moved, config, rng);
  REQUIRE(r);
  CHECK(r->kind == ResponseKind::kBackchannelReactive);
  CHECK(r->has_sentiment);
  CHECK(contains(config.pools.backchannel_reactive, r->text));

  CHECK_FALSE(backchannel_decision(100, plain, config, rng));
  CHECK(backchannel_decision(400, plain, config, rng));
  CHECK_FALSE(backchannel_decision(399, plain, config, rng));
}

TEST_CASE("backchannel texts for single-entry pools") {
  DialogueConfig config;
  config.pools.backchannel_formal = {"un"};
  config.pools.backchannel_reactive = {"he-"};
  RngState rng(0);
  CHECK(backchannel_decision(450, utterance("so"), config, rng)->text == "un");
  CHECK(backchannel_decision(450, utterance("so", {sentiment("positive", 0.8)}), config, rng)
            ->text == "he-");
}

TEST_CASE("backchannel policy is pluggable") {
  struct Never final : BackchannelPolicy {
    std::optional<ResponseKind> decide(Millis, const UserUtterance&,
                                       const DialogueConfig&) const override {
      return std::nullopt;
    }
  };
  DialogueConfig config;
  RngState rng(0);
  CHECK_FALSE(backchannel_decision(5000, utterance("so"), config, rng, Never{}));
}

TEST_CASE("silence prompt threshold is strict") {
  DialogueConfig config;
  RngState rng(0);
  auto p = silence_prompt_check(5001, config, rng);
  REQUIRE(p);
  CHECK(p->kind == ResponseKind::kSilencePrompt);
  CHECK(contains(config.pools.exploratory_questions, p->text));
  CHECK_FALSE(silence_prompt_check(5000, config, rng));
  CHECK_FALSE(silence_prompt_check(0, config, rng));
}

TEST_CASE("config validation") {
  DialogueConfig config;
  CHECK_NOTHROW(config.validate());
  auto bad = config;
  bad.pools.formulaic.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.asr_confidence_min = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.pools.repeat_templates = {"no placeholder"};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("merge_turn joins texts and annotations") {
  auto a = utterance("Pasta", {focus("Pasta", 0.9)}, 0, 500);
  auto b = utterance("carbonara.", {sentiment("positive", 0.6)}, 600, 1200);
  auto m = merge_turn(a, b);
  CHECK(m.text == "Pasta carbonara.");
  CHECK(m.session_time_ms == 0);
  CHECK(m.end_time_ms == 1200);
  CHECK(m.annotations.size() == 2);
}

// Independent reference for the hierarchy: which kinds are generable.
TEST_CASE("property: hierarchy dominance and repeat contains the focus word") {
  DialogueConfig config;
  config.pools.question_templates.push_back({"Tell me about {X}?", ""});
  std::mt19937_64 gen(20240501);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  const std::vector<std::pair<std::string, std::optional<std::string>>> words = {
      {"ramen", "food"}, {"Kyoto", "place"}, {"train", std::nullopt},
      {"hiking", "activity"}, {"sky", "weather"}};
  RngState rng(9);
  for (int i = 0; i < 2000; ++i) {
    std::string text = "so";
    std::vector<Annotation> annotations;
    const int n = static_cast<int>(gen() % 4);
    for (int k = 0; k < n; ++k) {
      if (gen() % 3 == 0) {
        annotations.push_back(sentiment(gen() % 2 ? "positive" : "negative", conf(gen)));
      } else {
        const auto& [w, cat] = words[gen() % words.size()];
        text += " " + w;
        annotations.push_back(focus(w, conf(gen), cat));
      }
    }
    bool assess = false, question = false, repeat = false;
    for (const auto& a : annotations) {
      if (a.confidence < config.asr_confidence_min) continue;
      if (a.kind == AnnotationKind::kSentiment) {
        assess = true;
      } else {
        repeat = true;
        for (const auto& q : config.pools.question_templates) {
          const bool match = a.category ? q.category == *a.category : q.category.empty();
          question = question || match;
        }
      }
    }
    const auto r = select_response(utterance(text, annotations), config, rng);
    const ResponseKind expected = assess     ? ResponseKind::kAssessment
                                  : question ? ResponseKind::kElaboratingQuestion
                                  : repeat   ? ResponseKind::kRepeatedResponse
                                             : ResponseKind::kFormulaic;
    REQUIRE(r.kind == expected);
    CHECK(r.has_sentiment == (r.kind == ResponseKind::kAssessment));
    if (r.kind == ResponseKind::kRepeatedResponse) {
      bool has_word = false;
      for (const auto& a : annotations) {
        has_word = has_word || (a.kind == AnnotationKind::kFocusWord &&
                                a.confidence >= config.asr_confidence_min &&
                                r.text.find(a.value) != std::string::npos);
      }
      CHECK(has_word);
    }
  }
}
