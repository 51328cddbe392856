#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "semiauto/types.hpp"

namespace semiauto {

enum class AnnotationKind { kFocusWord, kSentiment };

// ASR stand-in. For a focus word, `value` is the surface form and `category`
// selects question templates. For a sentiment, `value` is "positive" or
// "negative".
struct Annotation {
  AnnotationKind kind = AnnotationKind::kFocusWord;
  std::string value;
  double confidence = 0.0;
  std::optional<std::string> category;

  std::optional<Polarity> polarity() const;

  bool operator==(const Annotation&) const = default;
};

struct UserUtterance {
  Millis session_time_ms = 0;  // start of speech
  Millis end_time_ms = 0;
  std::string text;
  std::vector<Annotation> annotations;

  bool operator==(const UserUtterance&) const = default;
};

// Throws Error(kMalformedInput) when the utterance or one of its annotations
// breaks an invariant.
void validate(const UserUtterance& utterance);

// Joins the utterances of one user turn into a single utterance: texts are
// space-separated, annotations concatenated.
UserUtterance merge_turn(const UserUtterance& head, const UserUtterance& tail);

struct AgentResponse {
  Millis session_time_ms = 0;
  ResponseKind kind = ResponseKind::kFormulaic;
  std::string text;
  bool has_sentiment = false;
  std::optional<Expression> expression;

  bool operator==(const AgentResponse&) const = default;
};

// A question template like "What type of {X} did you eat?". An empty category
// marks a generic template, usable only by untagged focus words.
struct QuestionTemplate {
  std::string text;
  std::string category;

  bool operator==(const QuestionTemplate&) const = default;
};

inline constexpr std::string_view kFocusPlaceholder = "{X}";

struct ResponsePools {
  std::vector<std::string> formulaic{"I see.", "OK.", "Yes.", "Uh-huh.", "Right."};
  std::vector<std::string> assessment_positive{"That's great!", "Wonderful!",
                                               "That sounds fun!"};
  std::vector<std::string> assessment_negative{"That's a shame...", "Oh no...",
                                               "That sounds hard."};
  std::vector<QuestionTemplate> question_templates{
      {"What type of {X} did you eat?", "food"},
      {"What was the {X} like?", "food"},
      {"What did you do in {X}?", "place"},
      {"How did you get to {X}?", "place"},
      {"How often do you go {X}?", "activity"},
  };
  std::vector<std::string> repeat_templates{"{X}...", "{X}?"};
  std::vector<std::string> exploratory_questions{
      "Can you tell me more about that?", "What happened after that?",
      "How did you feel about it?"};
  std::vector<std::string> backchannel_formal{"un", "unun", "ununun"};
  std::vector<std::string> backchannel_reactive{"ah", "he-", "oh-"};

  bool operator==(const ResponsePools&) const = default;
};

struct DialogueConfig {
  double asr_confidence_min = 0.5;
  Millis silence_prompt_ms = 5000;
  Millis backchannel_pause_ms = 400;
  std::uint64_t rng_seed = 0;
  ResponsePools pools;

  // Throws Error(kConfig).
  void validate() const;

  bool operator==(const DialogueConfig&) const = default;
};

enum class Pool : std::size_t {
  kFormulaic,
  kAssessmentPositive,
  kAssessmentNegative,
  kQuestion,
  kRepeat,
  kExploratory,
  kBackchannelFormal,
  kBackchannelReactive,
  kCount,
};

// Seeded pool selector. Draws are uniform over a pool except that the entry
// drawn last from the same pool is excluded when any other entry is allowed.
class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0) : engine_(seed) {}

  // Index into a pool of `size` entries.
  std::size_t draw(Pool pool, std::size_t size);

  // Picks among `candidates` (indices into the pool).
  std::size_t draw_from(Pool pool, const std::vector<std::size_t>& candidates);

  bool operator==(const RngState&) const = default;

 private:
  std::uint64_t next_below(std::uint64_t bound);

  std::mt19937_64 engine_;
  std::array<std::optional<std::size_t>, static_cast<std::size_t>(Pool::kCount)>
      last_{};
};

// Picks the turn response: the highest-priority generable kind among
// Assessment, ElaboratingQuestion, RepeatedResponse, Formulaic. The response
// is stamped with the utterance end time.
AgentResponse select_response(const UserUtterance& utterance,
                              const DialogueConfig& config, RngState& rng);

// Pluggable mid-turn backchannel decision. Returns the backchannel kind to
// emit, or nullopt for none.
class BackchannelPolicy {
 public:
  virtual ~BackchannelPolicy() = default;
  virtual std::optional<ResponseKind> decide(Millis pause_ms,
                                             const UserUtterance& last_utterance,
                                             const DialogueConfig& config) const = 0;
};

// Reactive when the last utterance carries a confident sentiment, formal once
// the pause reaches backchannel_pause_ms.
class PauseSentimentRule final : public BackchannelPolicy {
 public:
  std::optional<ResponseKind> decide(Millis pause_ms,
                                     const UserUtterance& last_utterance,
                                     const DialogueConfig& config) const override;
};

std::shared_ptr<const BackchannelPolicy> default_backchannel_policy();

std::optional<AgentResponse> backchannel_decision(
    Millis pause_ms, const UserUtterance& last_utterance,
    const DialogueConfig& config, RngState& rng,
    const BackchannelPolicy& policy = PauseSentimentRule{});

// Exploratory question once silence strictly exceeds silence_prompt_ms.
std::optional<AgentResponse> silence_prompt_check(Millis silence_ms,
                                                  const DialogueConfig& config,
                                                  RngState& rng);

}  // namespace semiauto
