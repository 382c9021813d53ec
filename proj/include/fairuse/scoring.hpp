#pragma once

#include "fairuse/textcorpus.hpp"

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairuse {

struct ScoreResult {
  double value = 0.0;  // always in [0,1]
  std::string scorer_id;
  std::string rationale;  // optional free text
};

enum class ScorerKind { kLexical, kRemoteJudge };

// Knobs of the deterministic lexical baselines. Weights may be arbitrary
// reals; scores clamp to [0,1] afterwards.
struct LexicalParams {
  double coverage_weight = 0.6;
  double span_weight = 0.4;
  double refusal_penalty = 1.0;   // 1 zeroes helpfulness on detected refusals
  std::size_t target_length = 100;  // tokens needed for full helpfulness credit
  std::size_t min_match = 3;        // verbatim segment floor for the risk score
};

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kLexical;
  std::string endpoint;     // remote judge only: scheme://host:port
  std::string template_id;  // remote judge only
  std::string model = "judge";
  std::string auth_token;
  std::chrono::milliseconds timeout{5000};
  int max_retries = 2;
  std::size_t max_in_flight = 8;
  LexicalParams lexical;
  std::vector<std::string> refusal_patterns;  // empty means the built-in list
};

// Throws ConfigError when the config is inconsistent (remote judge without
// endpoint or template, non-positive timeout).
void validate_scorer(const ScorerConfig& config);

// Helpfulness H in [0,1]. Lexical baseline: token count against
// target_length, zeroed (by refusal_penalty) when the response opens with a
// refusal. Remote judge: parsed rating rescaled to [0,1].
ScoreResult score_helpfulness(const std::string& prompt, const std::string& response,
                              const ScorerConfig& config);

// Risk R in [0,1]. Lexical baseline:
// clamp(coverage_weight*reuse_coverage + span_weight*longest_span_ratio).
ScoreResult score_risk(const std::string& response, const CorpusIndex& corpus,
                       const ScorerConfig& config);

// Extracts a rating from a judge reply: "N/10", then "N out of 10", then a
// bare number in [0,10]; first acceptable match wins; result rescaled to
// [0,1]. Throws ReplyParseError (carrying the raw reply) when nothing
// matches.
double parse_judge_reply(const std::string& reply);

// Judge prompts live here as named resources so reports can cite the exact
// wording. Placeholders: {prompt} and {response}.
struct JudgeTemplate {
  std::string_view id;
  std::string_view text;
};

std::span<const JudgeTemplate> judge_templates();
const JudgeTemplate* find_judge_template(std::string_view id);

}  // namespace fairuse
