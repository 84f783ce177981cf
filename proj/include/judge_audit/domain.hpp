#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "judge_audit/rational.hpp"

namespace judge_audit {

enum class Criterion { kCoherence, kConsistency, kFluency, kRelevance };

inline constexpr std::array<Criterion, 4> kAllCriteria = {
    Criterion::kCoherence, Criterion::kConsistency, Criterion::kFluency,
    Criterion::kRelevance};

// Lowercase canonical names, used in every file format.
std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view name);

inline constexpr int kMinLikert = 1;
inline constexpr int kMaxLikert = 5;

struct EvalInstance {
  std::string doc_id;
  std::string document;
  std::string system_id;
  std::string output;
  // Mean of annotator scores per criterion. Absent when unannotated.
  std::map<Criterion, Rational> human_avg;
};

struct LikertRecord {
  std::string doc_id;
  std::string system_id;
  Criterion criterion = Criterion::kCoherence;
  std::string judge_id;
  int judge_score = 0;
  int gold = 0;
};

enum class Side { kA, kB };

struct PairwiseVerdict {
  std::string doc_id;
  Criterion criterion = Criterion::kCoherence;
  std::string judge_id;
  std::string system_a;
  std::string system_b;
  int repetition_index = 0;
  Side winner = Side::kA;
};

// Nearest integer, exact .5 rounds up. Throws DomainError outside [1, 5].
int gold_label(const Rational& human_avg);

void validate_likert(int score);

// Ordering used for every id tie-break: numeric when both ids are plain
// digit strings ("2" < "11"), byte-lexicographic otherwise.
bool id_less(std::string_view a, std::string_view b);

struct IdLess {
  bool operator()(std::string_view a, std::string_view b) const { return id_less(a, b); }
};

}  // namespace judge_audit
