#include "semiauto/dialogue.hpp"

#include <algorithm>
#include <string_view>

#include "semiauto/error.hpp"
#include "semiauto/text.hpp"

namespace semiauto {
namespace {

std::string substitute(std::string_view tmpl, std::string_view word) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = tmpl.find(kFocusPlaceholder, pos);
    if (hit == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      return out;
    }
    out.append(tmpl.substr(pos, hit - pos));
    out.append(word);
    pos = hit + kFocusPlaceholder.size();
  }
}

bool passes_gate(const Annotation& a, const DialogueConfig& config) {
  return a.confidence >= config.asr_confidence_min;
}

// Confident annotations of one kind, most confident first; ties keep
// utterance order.
std::vector<const Annotation*> confident(const UserUtterance& u, AnnotationKind kind,
                                         const DialogueConfig& config) {
  std::vector<const Annotation*> out;
  for (const auto& a : u.annotations) {
    if (a.kind != kind || !passes_gate(a, config)) continue;
    if (kind == AnnotationKind::kSentiment && !a.polarity()) continue;
    out.push_back(&a);
  }
  std::stable_sort(out.begin(), out.end(), [](const Annotation* l, const Annotation* r) {
    return l->confidence > r->confidence;
  });
  return out;
}

bool template_matches(const QuestionTemplate& t, const Annotation& focus) {
  const bool tagged = focus.category && !focus.category->empty();
  if (!tagged) return t.category.empty();
  return t.category == *focus.category;
}

const std::string& draw_text(const std::vector<std::string>& pool, Pool id, RngState& rng) {
  return pool[rng.draw(id, pool.size())];
}

void require_pool(bool non_empty, std::string_view name) {
  if (!non_empty) {
    throw Error(ErrorCode::kConfig, "pool '" + std::string(name) + "' is empty");
  }
}

void require_placeholder(std::string_view tmpl, std::string_view pool) {
  if (tmpl.find(kFocusPlaceholder) == std::string_view::npos) {
    throw Error(ErrorCode::kConfig, "template '" + std::string(tmpl) + "' in pool '" +
                                        std::string(pool) + "' lacks {X}");
  }
}

}  // namespace

std::optional<Polarity> Annotation::polarity() const {
  if (kind != AnnotationKind::kSentiment) return std::nullopt;
  return parse_polarity(value);
}

void validate(const UserUtterance& u) {
  if (u.session_time_ms < 0 || u.end_time_ms < u.session_time_ms) {
    throw Error(ErrorCode::kMalformedInput, "utterance ends before it starts");
  }
  if (!text::is_valid_utf8(u.text)) {
    throw Error(ErrorCode::kMalformedInput, "utterance text is not UTF-8");
  }
  if (text::is_blank(u.text)) {
    throw Error(ErrorCode::kMalformedInput, "utterance text is empty");
  }
  for (const auto& a : u.annotations) {
    if (!(a.confidence >= 0.0 && a.confidence <= 1.0)) {
      throw Error(ErrorCode::kMalformedInput, "annotation confidence outside [0,1]");
    }
    if (a.kind == AnnotationKind::kFocusWord) {
      if (a.value.empty() || u.text.find(a.value) == std::string::npos) {
        throw Error(ErrorCode::kMalformedInput,
                    "focus word '" + a.value + "' does not occur in the utterance");
      }
    } else if (!a.polarity()) {
      throw Error(ErrorCode::kMalformedInput, "sentiment must be positive or negative");
    }
  }
}

UserUtterance merge_turn(const UserUtterance& head, const UserUtterance& tail) {
  UserUtterance merged = head;
  merged.end_time_ms = std::max(head.end_time_ms, tail.end_time_ms);
  merged.text += ' ';
  merged.text += tail.text;
  merged.annotations.insert(merged.annotations.end(), tail.annotations.begin(),
                            tail.annotations.end());
  return merged;
}

void DialogueConfig::validate() const {
  if (!(asr_confidence_min >= 0.0 && asr_confidence_min <= 1.0)) {
    throw Error(ErrorCode::kConfig, "asr_confidence_min must lie in [0,1]");
  }
  if (silence_prompt_ms <= 0) throw Error(ErrorCode::kConfig, "silence_prompt_ms must be > 0");
  if (backchannel_pause_ms <= 0) {
    throw Error(ErrorCode::kConfig, "backchannel_pause_ms must be > 0");
  }
  require_pool(!pools.formulaic.empty(), "formulaic");
  require_pool(!pools.assessment_positive.empty(), "assessment_positive");
  require_pool(!pools.assessment_negative.empty(), "assessment_negative");
  require_pool(!pools.question_templates.empty(), "question_templates");
  require_pool(!pools.repeat_templates.empty(), "repeat_templates");
  require_pool(!pools.exploratory_questions.empty(), "exploratory_questions");
  require_pool(!pools.backchannel_formal.empty(), "backchannel_formal");
  require_pool(!pools.backchannel_reactive.empty(), "backchannel_reactive");
  for (const auto& q : pools.question_templates) require_placeholder(q.text, "question_templates");
  for (const auto& r : pools.repeat_templates) require_placeholder(r, "repeat_templates");
}

std::uint64_t RngState::next_below(std::uint64_t bound) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::size_t RngState::draw(Pool pool, std::size_t size) {
  std::vector<std::size_t> all(size);
  for (std::size_t i = 0; i < size; ++i) all[i] = i;
  return draw_from(pool, all);
}

std::size_t RngState::draw_from(Pool pool, const std::vector<std::size_t>& candidates) {
  auto& last = last_[static_cast<std::size_t>(pool)];
  std::vector<std::size_t> allowed;
  allowed.reserve(candidates.size());
  for (auto c : candidates) {
    if (!last || c != *last) allowed.push_back(c);
  }
  if (allowed.empty()) allowed = candidates;
  std::size_t pick = allowed.size() == 1 ? allowed.front()
                                          : allowed[next_below(allowed.size())];
  last = pick;
  return pick;
}

AgentResponse select_response(const UserUtterance& utterance,
                              const DialogueConfig& config, RngState& rng) {
  validate(utterance);
  const auto& pools = config.pools;
  AgentResponse out;
  out.session_time_ms = utterance.end_time_ms;

  if (auto sentiments = confident(utterance, AnnotationKind::kSentiment, config);
      !sentiments.empty()) {
    const bool positive = sentiments.front()->polarity() == Polarity::kPositive;
    out.kind = ResponseKind::kAssessment;
    out.text = positive ? draw_text(pools.assessment_positive, Pool::kAssessmentPositive, rng)
                        : draw_text(pools.assessment_negative, Pool::kAssessmentNegative, rng);
    out.has_sentiment = true;
    out.expression = positive ? Expression::kHappy : Expression::kSad;
    return out;
  }

  const auto focus_words = confident(utterance, AnnotationKind::kFocusWord, config);
  for (const Annotation* focus : focus_words) {
    std::vector<std::size_t> matching;
    for (std::size_t i = 0; i < pools.question_templates.size(); ++i) {
      if (template_matches(pools.question_templates[i], *focus)) matching.push_back(i);
    }
    if (matching.empty()) continue;
    const auto& tmpl = pools.question_templates[rng.draw_from(Pool::kQuestion, matching)];
    out.kind = ResponseKind::kElaboratingQuestion;
    out.text = substitute(tmpl.text, focus->value);
    return out;
  }

  if (!focus_words.empty()) {
    out.kind = ResponseKind::kRepeatedResponse;
    out.text = substitute(draw_text(pools.repeat_templates, Pool::kRepeat, rng),
                          focus_words.front()->value);
    return out;
  }

  out.kind = ResponseKind::kFormulaic;
  out.text = draw_text(pools.formulaic, Pool::kFormulaic, rng);
  return out;
}

std::optional<ResponseKind> PauseSentimentRule::decide(Millis pause_ms,
                                                       const UserUtterance& last_utterance,
                                                       const DialogueConfig& config) const {
  for (const auto& a : last_utterance.annotations) {
    if (a.kind == AnnotationKind::kSentiment && a.polarity() && passes_gate(a, config)) {
      return ResponseKind::kBackchannelReactive;
    }
  }
  if (pause_ms >= config.backchannel_pause_ms) return ResponseKind::kBackchannelFormal;
  return std::nullopt;
}

std::shared_ptr<const BackchannelPolicy> default_backchannel_policy() {
  static const auto policy = std::make_shared<const PauseSentimentRule>();
  return policy;
}

std::optional<AgentResponse> backchannel_decision(Millis pause_ms,
                                                  const UserUtterance& last_utterance,
                                                  const DialogueConfig& config, RngState& rng,
                                                  const BackchannelPolicy& policy) {
  auto kind = policy.decide(pause_ms, last_utterance, config);
  if (!kind) return std::nullopt;
  AgentResponse out;
  out.session_time_ms = last_utterance.end_time_ms + pause_ms;
  out.kind = *kind;
  if (*kind == ResponseKind::kBackchannelReactive) {
    out.text = draw_text(config.pools.backchannel_reactive, Pool::kBackchannelReactive, rng);
    out.has_sentiment = true;
  } else {
    out.text = draw_text(config.pools.backchannel_formal, Pool::kBackchannelFormal, rng);
  }
  return out;
}

std::optional<AgentResponse> silence_prompt_check(Millis silence_ms,
                                                  const DialogueConfig& config,
                                                  RngState& rng) {
  if (silence_ms <= config.silence_prompt_ms) return std::nullopt;
  AgentResponse out;
  out.kind = ResponseKind::kSilencePrompt;
  out.text = draw_text(config.pools.exploratory_questions, Pool::kExploratory, rng);
  return out;
}

}  // namespace semiauto
