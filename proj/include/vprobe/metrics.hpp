#pragma once

#include <span>
#include <string>
#include <string_view>

namespace vprobe {

struct MatchResult {
  double gpm = 0.0;
  int exact = 0;
  int inclusion = 0;
  std::string normalized_prediction;
  std::string extracted_answer;
};

// Lowercase, trim, collapse whitespace runs, drop trailing . , ! ?
std::string normalize(std::string_view text);

// Longest maximal digit run (leftmost on ties); the whole string when it has
// no digit.
std::string extract_answer_token(std::string_view normalized_prediction);

// Ratcliff-Obershelp similarity 2*K/(|a|+|b|). The longest common substring is
// chosen with ties broken by earliest start in `a`, then earliest in `b`, and
// the procedure recurses on both remainders. No junk heuristics.
double gpm(std::string_view a, std::string_view b);

// Total length of the recursive matching blocks (the K above).
std::size_t gpm_matched_chars(std::string_view a, std::string_view b);

int exact_match(std::string_view prediction, std::span<const std::string> truths);

// Ground truth contained in the prediction, after normalisation of both.
// Throws kEmptyTruth when every truth normalises to "".
int inclusion_match(std::string_view prediction, std::span<const std::string> truths);

// Scoring used for the synthetic suites: GPM on the extracted answer token.
MatchResult score_reply(std::string_view prediction, std::string_view truth);

}  // namespace vprobe
