#include <algorithm>

#include "doctest.h"
#include "recount.hpp"
#include "semiauto/error.hpp"
#include "semiauto/metrics.hpp"
#include "semiauto/sim.hpp"
#include "support.hpp"

using namespace semiauto;
using semiauto::sim::SessionMetrics;
using testing_support::ScriptBuilder;

namespace {

std::vector<SessionMetrics> with_counts(std::initializer_list<std::int64_t> counts) {
  std::vector<SessionMetrics> out;
  for (auto c : counts) {
    SessionMetrics m;
    m.takeover_count = c;
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("median of an even count is the mean of the middle two") {
  CHECK(sim::summarize(with_counts({2, 4, 5, 7})).median_takeovers == 4.5);
  CHECK(sim::summarize(with_counts({7, 2, 5, 4})).median_takeovers == 4.5);
  CHECK(sim::summarize(with_counts({3, 1, 2})).median_takeovers == 2.0);
  CHECK(sim::summarize(with_counts({6})).median_takeovers == 6.0);
}

TEST_CASE("range endpoints") {
  auto s = sim::summarize(with_counts({0, 14}));
  CHECK(s.min_takeovers == 0);
  CHECK(s.max_takeovers == 14);
  s = sim::summarize(with_counts({5, 0, 3, 14, 9}));
  CHECK(s.min_takeovers == 0);
  CHECK(s.max_takeovers == 14);
  CHECK(s.sessions == 5);
}

TEST_CASE("empty corpus") {
  try {
    sim::summarize({});
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyInput);
  }
}

TEST_CASE("speech is clipped to the takeover and to the next utterance") {
  ScriptBuilder b;
  b.toggle(1000)
      .operator_say(1500, "first", 5000)   // cut at 2500
      .operator_say(2500, "second", 9000)  // cut at the return, 4000
      .toggle(4000)
      .length(6000);
  const auto log = sim::run_script(b.script(), Config{});
  const auto m = sim::compute_metrics(log);
  CHECK(m.operator_speech_ms == 1000 + 1500);
  CHECK(m.operator_control_ms == 3000);
  CHECK(m == testing_support::recount(serialize_log(log)));
}

TEST_CASE("an open takeover counts to the session end") {
  ScriptBuilder b;
  b.toggle(1000).operator_say(2000, "hello", 10000).length(5000);
  const auto m = sim::compute_metrics(sim::run_script(b.script(), Config{}));
  CHECK(m.takeover_count == 1);
  CHECK(m.operator_control_ms == 4000);
  CHECK(m.operator_speech_ms == 3000);
}

TEST_CASE("property: metrics equal a brute-force recount") {
  std::vector<SessionMetrics> all;
  for (std::uint64_t seed = 500; seed < 600; ++seed) {
    const auto log = sim::run_script(sim::generate_script(seed), Config{});
    const auto m = sim::compute_metrics(log);
    REQUIRE(m == testing_support::recount(serialize_log(log)));
    CHECK(m.operator_speech_ms >= 0);
    CHECK(m.operator_speech_ms <= m.operator_control_ms);
    std::int64_t reasons = 0;
    for (const auto& [c, n] : m.per_condition_prompt_counts) reasons += n;
    CHECK(reasons >= m.prompt_count);
    CHECK(reasons <= 2 * m.prompt_count);
    all.push_back(m);
  }
  const auto s = sim::summarize(all);
  std::vector<std::int64_t> counts;
  std::int64_t speech = 0;
  for (const auto& m : all) {
    counts.push_back(m.takeover_count);
    speech += m.operator_speech_ms;
  }
  std::sort(counts.begin(), counts.end());
  CHECK(s.median_takeovers == (counts[49] + counts[50]) / 2.0);
  CHECK(s.min_takeovers == counts.front());
  CHECK(s.max_takeovers == counts.back());
  CHECK(s.mean_operator_speech_ms == static_cast<double>(speech) / 100.0);
}

TEST_CASE("metrics json") {
  ScriptBuilder b;
  b.toggle(1000).operator_say(1500, "hi", 3000).toggle(6000).length(7000);
  const auto j = sim::to_json(sim::compute_metrics(sim::run_script(b.script(), Config{})));
  CHECK(j.at("takeover_count") == 1);
  CHECK(j.at("operator_speech_ms") == 3000);
  CHECK(j.at("per_condition_prompt_counts").size() == 4);
}
