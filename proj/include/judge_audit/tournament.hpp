#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "judge_audit/domain.hpp"
#include "judge_audit/matrix.hpp"
#include "judge_audit/rational.hpp"

namespace judge_audit {

// Reference rate of a uniformly random tournament, emitted with every
// violation distribution for plotting.
inline constexpr double kRandomBaselineRate = 0.25;

// Pair whose surviving repetitions split evenly; the edge was resolved
// toward `winner` (the smaller id).
struct TieBreak {
  std::string winner;
  std::string loser;
  int wins_each = 0;
};

struct Tournament {
  std::string doc_id;
  Criterion criterion = Criterion::kCoherence;
  std::string judge_id;
  std::vector<std::string> systems;
  int k = 0;
  // wins(i, j): repetitions in which systems[i] beat systems[j].
  SquareMatrix<int> wins;
  // edges(i, j): systems[i] is the majority-preferred side over systems[j].
  SquareMatrix<char> edges;
  std::vector<TieBreak> tie_breaks;

  std::size_t size() const { return systems.size(); }
  std::size_t index_of(const std::string& system_id) const;
};

// Tournament with the given majority edges and no win counts; used for
// synthetic analyses where only the graph matters.
Tournament tournament_from_edges(std::vector<std::string> systems, const SquareMatrix<char>& edges);

// Assembles one (document, criterion, judge) tournament from up to k
// verdicts per unordered pair. Throws IncompleteTournamentError when a
// pair has no verdict and ValidationError on inconsistent input.
Tournament build_tournament(std::span<const PairwiseVerdict> verdicts,
                            const std::vector<std::string>& systems, int k);

// Throws IncompleteTournamentError unless every pair has exactly one edge.
void require_complete(const Tournament& t);

std::vector<int> out_degrees(const Tournament& t);

// Number of unordered triples that form a directed 3-cycle.
std::int64_t count_directed_3cycles(const Tournament& t);

// Cyclic triples over C(n, 3). Throws DomainError for n < 3.
Rational violation_rate(const Tournament& t);

struct DocRate {
  std::string doc_id;
  Rational rho;
};

struct ViolationStats {
  std::vector<DocRate> per_doc;
  Rational aggregate_mean;
  Rational frac_docs_with_violation;
  Rational max_rho;
  Rational median_rho;
};

ViolationStats corpus_violation_stats(std::vector<DocRate> rates);

}  // namespace judge_audit
