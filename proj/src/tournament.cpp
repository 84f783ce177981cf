#include "judge_audit/tournament.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <tuple>

#include "judge_audit/errors.hpp"

namespace judge_audit {
namespace {

std::int64_t choose3(std::int64_t n) { return n * (n - 1) * (n - 2) / 6; }

}  // namespace

std::size_t Tournament::index_of(const std::string& system_id) const {
  auto it = std::find(systems.begin(), systems.end(), system_id);
  if (it == systems.end()) throw ValidationError("system '" + system_id + "' not in tournament");
  return static_cast<std::size_t>(it - systems.begin());
}

Tournament tournament_from_edges(std::vector<std::string> systems, const SquareMatrix<char>& edges) {
  if (edges.size() != systems.size()) throw ValidationError("edge matrix size mismatch");
  Tournament t;
  t.systems = std::move(systems);
  t.wins = SquareMatrix<int>(t.size(), 0);
  t.edges = edges;
  return t;
}

Tournament build_tournament(std::span<const PairwiseVerdict> verdicts,
                            const std::vector<std::string>& systems, int k) {
  if (k < 1) throw ValidationError("repetition count k must be positive");
  Tournament t;
  t.systems = systems;
  t.k = k;
  const std::size_t n = systems.size();
  if (std::set<std::string>(systems.begin(), systems.end()).size() != n) {
    throw ValidationError("duplicate system ids in tournament");
  }
  t.wins = SquareMatrix<int>(n, 0);
  t.edges = SquareMatrix<char>(n, 0);
  if (!verdicts.empty()) {
    t.doc_id = verdicts.front().doc_id;
    t.criterion = verdicts.front().criterion;
    t.judge_id = verdicts.front().judge_id;
  }

  std::set<std::tuple<std::size_t, std::size_t, int>> seen;
  for (const auto& v : verdicts) {
    if (v.doc_id != t.doc_id || v.criterion != t.criterion || v.judge_id != t.judge_id) {
      throw ValidationError("verdicts for one tournament must share document, criterion and judge");
    }
    if (v.system_a == v.system_b) throw ValidationError("verdict compares " + v.system_a + " with itself");
    if (v.repetition_index < 0 || v.repetition_index >= k) {
      throw ValidationError("repetition index " + std::to_string(v.repetition_index) +
                            " outside 0.." + std::to_string(k - 1));
    }
    std::size_t a = t.index_of(v.system_a);
    std::size_t b = t.index_of(v.system_b);
    if (!seen.emplace(std::min(a, b), std::max(a, b), v.repetition_index).second) {
      throw ValidationError("duplicate verdict for (" + v.system_a + ", " + v.system_b +
                            ") repetition " + std::to_string(v.repetition_index));
    }
    if (v.winner == Side::kA) {
      ++t.wins(a, b);
    } else {
      ++t.wins(b, a);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int wij = t.wins(i, j);
      const int wji = t.wins(j, i);
      if (wij + wji == 0) {
        throw IncompleteTournamentError("no verdict for pair (" + systems[i] + ", " + systems[j] +
                                        ") in document " + t.doc_id);
      }
      if (wij > wji) {
        t.edges(i, j) = 1;
      } else if (wji > wij) {
        t.edges(j, i) = 1;
      } else {
        const bool i_first = id_less(systems[i], systems[j]);
        const std::size_t w = i_first ? i : j;
        const std::size_t l = i_first ? j : i;
        t.edges(w, l) = 1;
        t.tie_breaks.push_back({systems[w], systems[l], wij});
      }
    }
  }
  return t;
}

void require_complete(const Tournament& t) {
  const std::size_t n = t.size();
  if (t.edges.size() != n) throw IncompleteTournamentError("edge matrix size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (t.edges(i, i)) throw IncompleteTournamentError("self-loop on " + t.systems[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((t.edges(i, j) != 0) == (t.edges(j, i) != 0)) {
        throw IncompleteTournamentError("pair (" + t.systems[i] + ", " + t.systems[j] +
                                        ") is not resolved to exactly one edge");
      }
    }
  }
}

std::vector<int> out_degrees(const Tournament& t) {
  std::vector<int> deg(t.size(), 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) deg[i] += t.edges(i, j) ? 1 : 0;
  }
  return deg;
}

std::int64_t count_directed_3cycles(const Tournament& t) {
  require_complete(t);
  const std::size_t n = t.size();
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> out(n * words, 0);
  std::vector<std::uint64_t> in(n * words, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (t.edges(i, j)) {
        out[i * words + j / 64] |= std::uint64_t{1} << (j % 64);
        in[j * words + i / 64] |= std::uint64_t{1} << (i % 64);
      }
    }
  }
  // Each cyclic triple i->j->m->i is seen once from each of its three edges.
  std::int64_t closed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!t.edges(i, j)) continue;
      for (std::size_t w = 0; w < words; ++w) {
        closed += std::popcount(out[j * words + w] & in[i * words + w]);
      }
    }
  }
  return closed / 3;
}

Rational violation_rate(const Tournament& t) {
  const auto n = static_cast<std::int64_t>(t.size());
  if (n < 3) throw DomainError("violation rate needs at least 3 systems");
  return Rational(count_directed_3cycles(t), choose3(n));
}

ViolationStats corpus_violation_stats(std::vector<DocRate> rates) {
  if (rates.empty()) throw DomainError("violation statistics of an empty document set");
  ViolationStats stats;
  Rational sum(0);
  std::int64_t with_violation = 0;
  std::vector<Rational> sorted;
  sorted.reserve(rates.size());
  for (const auto& r : rates) {
    if (r.rho < Rational(0) || r.rho > Rational(1)) {
      throw DomainError("violation rate " + r.rho.to_string() + " outside [0, 1]");
    }
    sum = sum + r.rho;
    if (r.rho > Rational(0)) ++with_violation;
    sorted.push_back(r.rho);
  }
  std::sort(sorted.begin(), sorted.end());
  const auto count = static_cast<std::int64_t>(rates.size());
  stats.aggregate_mean = sum / Rational(count);
  stats.frac_docs_with_violation = Rational(with_violation, count);
  stats.max_rho = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  stats.median_rho = sorted.size() % 2 == 1 ? sorted[mid]
                                            : (sorted[mid - 1] + sorted[mid]) / Rational(2);
  stats.per_doc = std::move(rates);
  return stats;
}

}  // namespace judge_audit
