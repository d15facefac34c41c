#include "vprobe/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <utility>
#include <vector>

#include "vprobe/error.hpp"

namespace vprobe {

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  while (!out.empty()) {
    const char last = out.back();
    if (last == '.' || last == ',' || last == '!' || last == '?') {
      out.pop_back();
    } else if (last == ' ') {
      out.pop_back();
    } else {
      break;
    }
  }
  return out;
}

std::string extract_answer_token(std::string_view s) {
  std::size_t best_start = 0;
  std::size_t best_len = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j - i > best_len) {
      best_start = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len == 0) return std::string(s);
  return std::string(s.substr(best_start, best_len));
}

namespace {

struct Block {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t len = 0;
};

struct Range {
  std::size_t alo, ahi, blo, bhi;
};

// Longest common substring of a[alo,ahi) and b[blo,bhi); strict '>' while
// scanning i then j ascending keeps the earliest (i, j) among equals.
// `prev` and `cur` hold at least bhi - blo + 1 entries.
Block longest_match(std::string_view a, std::size_t alo, std::size_t ahi, std::string_view b,
                    std::size_t blo, std::size_t bhi, std::uint32_t* prev, std::uint32_t* cur) {
  Block best{alo, blo, 0};
  const std::size_t m = bhi - blo;
  std::fill(prev, prev + m + 1, 0u);
  cur[0] = 0;
  for (std::size_t i = alo; i < ahi; ++i) {
    const char c = a[i];
    for (std::size_t j = 0; j < m; ++j) {
      const std::uint32_t len = c == b[blo + j] ? prev[j] + 1 : 0;
      cur[j + 1] = len;
      if (len > best.len) best = {i + 1 - len, blo + j + 1 - len, len};
    }
    std::swap(prev, cur);
  }
  return best;
}

// Each matched block turns one range into two, so the stack never holds more
// than min(|a|, |b|) + 1 ranges.
template <typename Match>
std::size_t matched_chars(std::string_view a, std::string_view b, Range* stack, Match&& longest) {
  std::size_t top = 0, total = 0;
  stack[top++] = {0, a.size(), 0, b.size()};
  while (top > 0) {
    const Range r = stack[--top];
    if (r.alo >= r.ahi || r.blo >= r.bhi) continue;
    const Block m = longest(r);
    if (m.len == 0) continue;
    total += m.len;
    stack[top++] = {r.alo, m.a, r.blo, m.b};
    stack[top++] = {m.a + m.len, r.ahi, m.b + m.len, r.bhi};
  }
  return total;
}

constexpr std::size_t kWord = 64;

// Bit-parallel longest match for |a|, |b| <= 64. eq[i] has bit j set when
// a[i] == b[j]; run[i] keeps the j where a common run of the current length
// ends at (i, j). The first i with a surviving run at the final length is the
// earliest start in a, and its lowest bit the earliest start in b.
Block longest_match_bits(const std::uint64_t* eq, const Range& r, std::uint64_t* run) {
  const std::uint64_t lo = r.blo == 0 ? ~0ULL : ~((1ULL << r.blo) - 1);
  const std::uint64_t window = r.bhi == kWord ? lo : lo & ((1ULL << r.bhi) - 1);
  std::uint64_t any = 0;
  for (std::size_t i = r.alo; i < r.ahi; ++i) any |= run[i] = eq[i] & window;
  if (any == 0) return {r.alo, r.blo, 0};
  std::size_t len = 1;
  for (;;) {
    std::uint64_t next_any = 0;
    std::uint64_t carry = 0;  // run[i - 1] from the previous length
    for (std::size_t i = r.alo; i < r.ahi; ++i) {
      const std::uint64_t extended = eq[i] & window & (carry << 1);
      carry = run[i];
      run[i] = extended;
      next_any |= extended;
    }
    if (next_any == 0) break;
    ++len;
  }
  // run[] now holds length len + 1 (all zero); rebuild length len directly.
  for (std::size_t i = r.alo + len - 1; i < r.ahi; ++i) {
    std::uint64_t ends = window;
    for (std::size_t k = 0; k < len; ++k) ends &= (eq[i - k] & window) << k;
    if (ends != 0) {
      const auto j_end = static_cast<std::size_t>(__builtin_ctzll(ends));
      return {i + 1 - len, j_end + 1 - len, len};
    }
  }
  return {r.alo, r.blo, 0};
}

}  // namespace

std::size_t gpm_matched_chars(std::string_view a, std::string_view b) {
  // Scoring runs over millions of short pairs, so those stay on the stack.
  if (a.size() <= kWord && b.size() <= kWord) {
    std::uint64_t eq[kWord], run[kWord];
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::uint64_t m = 0;
      for (std::size_t j = 0; j < b.size(); ++j) m |= static_cast<std::uint64_t>(a[i] == b[j]) << j;
      eq[i] = m;
    }
    Range stack[kWord + 1];
    return matched_chars(a, b, stack, [&](const Range& r) { return longest_match_bits(eq, r, run); });
  }
  std::vector<std::uint32_t> prev(b.size() + 1), cur(b.size() + 1);
  std::vector<Range> stack(std::min(a.size(), b.size()) + 1);
  return matched_chars(a, b, stack.data(), [&](const Range& r) {
    return longest_match(a, r.alo, r.ahi, b, r.blo, r.bhi, prev.data(), cur.data());
  });
}

double gpm(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  return 2.0 * static_cast<double>(gpm_matched_chars(a, b)) / static_cast<double>(a.size() + b.size());
}

int exact_match(std::string_view prediction, std::span<const std::string> truths) {
  const std::string p = normalize(prediction);
  return std::any_of(truths.begin(), truths.end(), [&](const std::string& t) { return normalize(t) == p; }) ? 1 : 0;
}

int inclusion_match(std::string_view prediction, std::span<const std::string> truths) {
  const std::string p = normalize(prediction);
  bool any_truth = false;
  for (const auto& t : truths) {
    const std::string nt = normalize(t);
    if (nt.empty()) continue;
    any_truth = true;
    if (p.find(nt) != std::string::npos) return 1;
  }
  if (!any_truth) throw Error(ErrorCode::kEmptyTruth, "every ground truth normalises to an empty string");
  return 0;
}

MatchResult score_reply(std::string_view prediction, std::string_view truth) {
  MatchResult r;
  r.normalized_prediction = normalize(prediction);
  r.extracted_answer = extract_answer_token(r.normalized_prediction);
  const std::string t(truth);
  const std::span<const std::string> truths(&t, 1);
  r.gpm = gpm(r.extracted_answer, normalize(truth));
  r.exact = exact_match(prediction, truths);
  r.inclusion = inclusion_match(prediction, truths);
  return r;
}

}  // namespace vprobe
