#include "judge_audit/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "judge_audit/errors.hpp"
#include "judge_audit/stats.hpp"

namespace judge_audit {
namespace {

// Indices sorted by descending score, id ascending among equal scores.
std::vector<std::string> order_by_score(const std::vector<std::string>& systems,
                                        const std::vector<double>& scores) {
  std::vector<std::size_t> idx(systems.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return id_less(systems[a], systems[b]);
  });
  std::vector<std::string> order;
  order.reserve(idx.size());
  for (std::size_t i : idx) order.push_back(systems[i]);
  return order;
}

void check_matrix(const WinMatrix& m) {
  if (m.w.size() != m.systems.size()) throw ValidationError("win matrix size mismatch");
  if (std::set<std::string>(m.systems.begin(), m.systems.end()).size() != m.systems.size()) {
    throw ValidationError("duplicate system ids in win matrix");
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.w(i, i) != 0) throw ValidationError("win matrix has a nonzero diagonal");
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m.w(i, j) < 0) throw ValidationError("win matrix has a negative entry");
    }
  }
}

// Every node reaches every other through pairs with at least one win.
bool strongly_connected(const WinMatrix& m) {
  const std::size_t n = m.size();
  if (n <= 1) return true;
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        std::int64_t wins = forward ? m.w(u, v) : m.w(v, u);
        if (wins > 0 && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach_all(true) && reach_all(false);
}

void normalize_geometric(std::vector<double>& strengths) {
  double log_sum = 0.0;
  for (double s : strengths) log_sum += std::log(s);
  const double scale = std::exp(-log_sum / static_cast<double>(strengths.size()));
  for (double& s : strengths) s *= scale;
}

}  // namespace

WinMatrix win_matrix_from_tournament(const Tournament& t) {
  WinMatrix m;
  m.systems = t.systems;
  m.w = SquareMatrix<std::int64_t>(t.size(), 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) m.w(i, j) = t.wins(i, j);
  }
  return m;
}

WinMatrix pool_win_matrix(std::span<const Tournament> tournaments) {
  if (tournaments.empty()) throw ValidationError("no tournaments to pool");
  const Tournament& first = tournaments.front();
  WinMatrix pooled;
  pooled.systems = first.systems;
  pooled.w = SquareMatrix<std::int64_t>(first.size(), 0);
  for (const auto& t : tournaments) {
    if (t.systems != first.systems) {
      throw ValidationError("tournament for document " + t.doc_id + " has a different system set");
    }
    if (t.judge_id != first.judge_id || t.criterion != first.criterion) {
      throw ValidationError("pooled tournaments must share judge and criterion");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = 0; j < t.size(); ++j) pooled.w(i, j) += t.wins(i, j);
    }
  }
  return pooled;
}

std::string to_string(RankingMethod m) {
  switch (m) {
    case RankingMethod::kWinRate:
      return "win_rate";
    case RankingMethod::kBradleyTerry:
      return "bradley_terry";
    case RankingMethod::kSchulze:
      return "schulze";
    case RankingMethod::kMfasCopeland:
      return "mfas_copeland";
    case RankingMethod::kMfasExact:
      return "mfas_exact";
  }
  return "unknown";
}

RankingResult win_rate_ranking(const WinMatrix& m) {
  check_matrix(m);
  RankingResult r;
  r.method = RankingMethod::kWinRate;
  r.scores.assign(m.size(), 0.5);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::int64_t won = 0;
    std::int64_t played = 0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      won += m.w(i, j);
      played += m.w(i, j) + m.w(j, i);
    }
    if (played > 0) r.scores[i] = static_cast<double>(won) / static_cast<double>(played);
  }
  r.order = order_by_score(m.systems, r.scores);
  return r;
}

double bradley_terry_log_likelihood(const WinMatrix& m, std::span<const double> strengths,
                                    double smoothing) {
  double ll = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (i == j) continue;
      const double wins = static_cast<double>(m.w(i, j)) + smoothing;
      if (wins == 0.0) continue;
      ll += wins * (std::log(strengths[i]) - std::log(strengths[i] + strengths[j]));
    }
  }
  return ll;
}

BradleyTerryFit fit_bradley_terry(const WinMatrix& m, const BradleyTerryOptions& options) {
  check_matrix(m);
  const std::size_t n = m.size();
  if (options.smoothing < 0.0) throw DomainError("negative Bradley-Terry smoothing");
  if (options.smoothing == 0.0 && !strongly_connected(m)) {
    throw DomainError("comparison graph is not strongly connected; the maximum likelihood "
                      "strengths are not finite without smoothing");
  }
  BradleyTerryFit fit;
  fit.strengths.assign(n, 1.0);
  if (n < 2) return fit;

  std::vector<double> total_wins(n, 0.0);
  SquareMatrix<double> games(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      total_wins[i] += static_cast<double>(m.w(i, j)) + options.smoothing;
      games(i, j) = static_cast<double>(m.w(i, j) + m.w(j, i)) + 2.0 * options.smoothing;
    }
  }

  fit.log_likelihood.push_back(bradley_terry_log_likelihood(m, fit.strengths, options.smoothing));
  std::vector<double> next(n);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && games(i, j) > 0.0) denom += games(i, j) / (fit.strengths[i] + fit.strengths[j]);
      }
      next[i] = total_wins[i] / denom;
    }
    normalize_geometric(next);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      change = std::max(change, std::abs(next[i] - fit.strengths[i]) / fit.strengths[i]);
    }
    fit.strengths = next;
    fit.iterations = iter;
    fit.log_likelihood.push_back(bradley_terry_log_likelihood(m, fit.strengths, options.smoothing));
    if (change < options.tolerance) return fit;
  }
  throw ConvergenceError("Bradley-Terry fit did not converge within " +
                             std::to_string(options.max_iterations) + " iterations",
                         fit.strengths);
}

RankingResult bradley_terry(const WinMatrix& m, const BradleyTerryOptions& options) {
  BradleyTerryFit fit = fit_bradley_terry(m, options);
  RankingResult r;
  r.method = RankingMethod::kBradleyTerry;
  r.scores = fit.strengths;
  r.order = order_by_score(m.systems, r.scores);
  return r;
}

RankingResult copeland_ranking(const WinMatrix& m) {
  check_matrix(m);
  RankingResult r;
  r.method = RankingMethod::kMfasCopeland;
  r.scores.assign(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m.w(i, j) > m.w(j, i)) r.scores[i] += 1.0;
    }
  }
  r.order = order_by_score(m.systems, r.scores);
  return r;
}

SquareMatrix<std::int64_t> schulze_path_strengths(const WinMatrix& m) {
  check_matrix(m);
  const std::size_t n = m.size();
  SquareMatrix<std::int64_t> p(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) p(i, j) = std::max<std::int64_t>(m.w(i, j) - m.w(j, i), 0);
    }
  }
  for (std::size_t via = 0; via < n; ++via) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == via) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || j == via) continue;
        p(i, j) = std::max(p(i, j), std::min(p(i, via), p(via, j)));
      }
    }
  }
  return p;
}

RankingResult schulze_ranking(const WinMatrix& m) {
  SquareMatrix<std::int64_t> p = schulze_path_strengths(m);
  RankingResult r;
  r.method = RankingMethod::kSchulze;
  r.scores.assign(m.size(), 0.0);
  // The beatpath relation is transitive, so sorting by the number of
  // systems beaten yields one of its linear extensions.
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (i != j && p(i, j) > p(j, i)) r.scores[i] += 1.0;
    }
  }
  r.order = order_by_score(m.systems, r.scores);
  return r;
}

MfasWeights parse_mfas_weights(const std::string& name) {
  if (name == "margin") return MfasWeights::kMargin;
  if (name == "unit") return MfasWeights::kUnit;
  throw ValidationError("unknown MFAS weighting '" + name + "' (expected margin or unit)");
}

std::string to_string(MfasWeights w) { return w == MfasWeights::kMargin ? "margin" : "unit"; }

std::int64_t mfas_edge_weight(const WinMatrix& m, std::size_t i, std::size_t j, MfasWeights weights) {
  const std::int64_t margin = m.w(i, j) - m.w(j, i);
  if (margin <= 0) return 0;
  return weights == MfasWeights::kMargin ? margin : 1;
}

std::int64_t feedback_cost(const WinMatrix& m, std::span<const std::string> order, MfasWeights weights) {
  if (order.size() != m.size()) throw ValidationError("order is not a permutation of the systems");
  std::vector<std::size_t> idx;
  idx.reserve(order.size());
  for (const auto& id : order) {
    auto it = std::find(m.systems.begin(), m.systems.end(), id);
    if (it == m.systems.end()) throw ValidationError("unknown system '" + id + "' in order");
    idx.push_back(static_cast<std::size_t>(it - m.systems.begin()));
  }
  if (std::set<std::size_t>(idx.begin(), idx.end()).size() != idx.size()) {
    throw ValidationError("order repeats a system");
  }
  std::int64_t cost = 0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) cost += mfas_edge_weight(m, idx[b], idx[a], weights);
  }
  return cost;
}

RankingResult mfas_exact(const WinMatrix& m, MfasWeights weights, std::size_t exact_bound) {
  check_matrix(m);
  const std::size_t n = m.size();
  if (exact_bound > kMaxExactBound) {
    throw SizeError("exact MFAS bound " + std::to_string(exact_bound) + " exceeds the supported " +
                    std::to_string(kMaxExactBound));
  }
  if (n > exact_bound) {
    throw SizeError("exact MFAS over " + std::to_string(n) + " systems exceeds the bound of " +
                    std::to_string(exact_bound) + "; use the Copeland approximation instead");
  }

  // Candidates are tried in id order so the greedy walk below picks the
  // lexicographically smallest optimal sequence.
  std::vector<std::size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return id_less(m.systems[a], m.systems[b]); });

  SquareMatrix<std::int64_t> weight(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) weight(i, j) = mfas_edge_weight(m, i, j, weights);
    }
  }
  // Cost of appending v after the prefix set: its edges into that set point backward.
  auto append_cost = [&](std::size_t v, std::uint32_t prefix) {
    std::int64_t c = 0;
    for (std::size_t u = 0; u < n; ++u) {
      if (prefix & (1u << u)) c += weight(v, u);
    }
    return c;
  };

  const std::uint32_t full = n == 0 ? 0 : (1u << n) - 1;
  // remaining[S]: minimum cost of ordering the systems outside prefix set S.
  std::vector<std::int64_t> remaining(std::size_t{full} + 1, std::numeric_limits<std::int64_t>::max());
  remaining[full] = 0;
  for (std::int64_t s = static_cast<std::int64_t>(full) - 1; s >= 0; --s) {
    const auto prefix = static_cast<std::uint32_t>(s);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (std::size_t v = 0; v < n; ++v) {
      if (prefix & (1u << v)) continue;
      best = std::min(best, append_cost(v, prefix) + remaining[prefix | (1u << v)]);
    }
    remaining[prefix] = best;
  }

  RankingResult r;
  r.method = RankingMethod::kMfasExact;
  std::uint32_t prefix = 0;
  while (prefix != full) {
    for (std::size_t v : by_id) {
      if (prefix & (1u << v)) continue;
      if (append_cost(v, prefix) + remaining[prefix | (1u << v)] == remaining[prefix]) {
        r.order.push_back(m.systems[v]);
        prefix |= 1u << v;
        break;
      }
    }
  }
  r.feedback_cost = remaining[0];
  return r;
}

std::optional<double> kendall_tau(std::span<const std::string> order, const GoldScores& gold) {
  if (order.size() < 2) throw DomainError("Kendall tau needs at least 2 systems");
  if (order.size() != gold.size()) throw ValidationError("order and gold scores cover different systems");
  std::vector<double> position_score;
  std::vector<double> gold_score;
  const auto n = static_cast<double>(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    auto it = gold.find(order[pos]);
    if (it == gold.end()) throw ValidationError("no gold score for system '" + order[pos] + "'");
    position_score.push_back(n - static_cast<double>(pos));
    gold_score.push_back(it->second);
  }
  if (std::set<std::string>(order.begin(), order.end()).size() != order.size()) {
    throw ValidationError("order repeats a system");
  }
  return stats::kendall_tau_b(position_score, gold_score);
}

GoldScores gold_ranking(const Corpus& corpus, Criterion criterion) {
  std::map<std::string, Rational> sums;
  std::map<std::string, std::int64_t> counts;
  std::vector<std::string> missing;
  for (const auto& inst : corpus.instances) {
    auto it = inst.human_avg.find(criterion);
    if (it == inst.human_avg.end()) {
      missing.push_back("(" + inst.doc_id + ", " + inst.system_id + ")");
      continue;
    }
    sums[inst.system_id] = sums[inst.system_id] + it->second;
    ++counts[inst.system_id];
  }
  if (!missing.empty()) {
    std::string msg = "missing human " + std::string(to_string(criterion)) + " annotations for";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  GoldScores gold;
  for (const auto& [system, sum] : sums) {
    gold[system] = (sum / Rational(counts[system])).to_double();
  }
  return gold;
}

RankingResult rank(const WinMatrix& m, RankingMethod method, const RankingOptions& options) {
  RankingResult r;
  switch (method) {
    case RankingMethod::kWinRate:
      return win_rate_ranking(m);
    case RankingMethod::kBradleyTerry:
      return bradley_terry(m, options.bradley_terry);
    case RankingMethod::kSchulze:
      return schulze_ranking(m);
    case RankingMethod::kMfasCopeland:
      r = copeland_ranking(m);
      r.feedback_cost = feedback_cost(m, r.order, options.mfas_weights);
      return r;
    case RankingMethod::kMfasExact:
      return mfas_exact(m, options.mfas_weights, options.exact_bound);
  }
  throw ValidationError("unknown ranking method");
}

RankingResult rank_by_document(std::span<const Tournament> tournaments, RankingMethod method,
                               const RankingOptions& options) {
  if (tournaments.empty()) throw ValidationError("no tournaments to rank");
  const auto& systems = tournaments.front().systems;
  std::map<std::string, double> position_sum;
  for (const auto& t : tournaments) {
    if (t.systems != systems) {
      throw ValidationError("tournament for document " + t.doc_id + " has a different system set");
    }
    RankingResult per_doc = rank(win_matrix_from_tournament(t), method, options);
    for (std::size_t pos = 0; pos < per_doc.order.size(); ++pos) {
      position_sum[per_doc.order[pos]] += static_cast<double>(pos + 1);
    }
  }
  RankingResult r;
  r.method = method;
  const auto docs = static_cast<double>(tournaments.size());
  std::vector<double> negated;
  for (const auto& s : systems) {
    r.scores.push_back(position_sum[s] / docs);
    negated.push_back(-r.scores.back());
  }
  r.order = order_by_score(systems, negated);
  return r;
}

}  // namespace judge_audit
