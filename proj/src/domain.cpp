#include "judge_audit/domain.hpp"

#include <algorithm>

#include "judge_audit/errors.hpp"

namespace judge_audit {

MissingCacheError::MissingCacheError(std::vector<std::string> digests)
    : Error([&] {
        std::string msg = "replay cache miss for " + std::to_string(digests.size()) + " request(s):";
        for (const auto& d : digests) msg += " " + d;
        return msg;
      }()),
      digests_(std::move(digests)) {}

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::kCoherence:
      return "coherence";
    case Criterion::kConsistency:
      return "consistency";
    case Criterion::kFluency:
      return "fluency";
    case Criterion::kRelevance:
      return "relevance";
  }
  return "unknown";
}

Criterion parse_criterion(std::string_view name) {
  for (Criterion c : kAllCriteria) {
    if (to_string(c) == name) return c;
  }
  throw ValidationError("unknown criterion '" + std::string(name) + "'");
}

int gold_label(const Rational& human_avg) {
  if (human_avg < Rational(kMinLikert) || human_avg > Rational(kMaxLikert)) {
    throw DomainError("human average " + human_avg.to_string() + " outside [1, 5]");
  }
  return static_cast<int>((human_avg + Rational(1, 2)).floor());
}

void validate_likert(int score) {
  if (score < kMinLikert || score > kMaxLikert) {
    throw DomainError("Likert score " + std::to_string(score) + " outside 1..5");
  }
}

bool id_less(std::string_view a, std::string_view b) {
  auto all_digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (all_digits(a) && all_digits(b)) {
    auto strip = [](std::string_view s) {
      std::size_t i = 0;
      while (i + 1 < s.size() && s[i] == '0') ++i;
      return s.substr(i);
    };
    std::string_view sa = strip(a);
    std::string_view sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
    return a < b;  // "01" vs "1": fall back to bytes so the order stays strict
  }
  return a < b;
}

}  // namespace judge_audit
