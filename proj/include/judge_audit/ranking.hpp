#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "judge_audit/dataset.hpp"
#include "judge_audit/matrix.hpp"
#include "judge_audit/tournament.hpp"

namespace judge_audit {

struct WinMatrix {
  std::vector<std::string> systems;
  // w(i, j): total wins of systems[i] over systems[j].
  SquareMatrix<std::int64_t> w;

  std::size_t size() const { return systems.size(); }
};

WinMatrix win_matrix_from_tournament(const Tournament& t);

// Element-wise sum of per-document win counts. All tournaments must share
// judge, criterion and the same ordered system list.
WinMatrix pool_win_matrix(std::span<const Tournament> tournaments);

enum class RankingMethod { kWinRate, kBradleyTerry, kSchulze, kMfasCopeland, kMfasExact };

inline constexpr RankingMethod kAllRankingMethods[] = {
    RankingMethod::kWinRate, RankingMethod::kBradleyTerry, RankingMethod::kSchulze,
    RankingMethod::kMfasCopeland, RankingMethod::kMfasExact};

std::string to_string(RankingMethod m);

struct RankingResult {
  RankingMethod method = RankingMethod::kWinRate;
  std::vector<std::string> order;  // best first
  // Per-system values aligned with WinMatrix::systems (win rate, strength,
  // beaten count, Copeland score; empty for the exact MFAS order).
  std::vector<double> scores;
  // Total weight of backward majority edges of `order` (MFAS methods only).
  std::optional<std::int64_t> feedback_cost;
  std::optional<double> tau_vs_gold;
};

RankingResult win_rate_ranking(const WinMatrix& m);

struct BradleyTerryOptions {
  double smoothing = 0.01;  // pseudo-wins added to every ordered pair
  int max_iterations = 10'000;
  double tolerance = 1e-10;  // max relative change in any strength
};

struct BradleyTerryFit {
  std::vector<double> strengths;  // geometric mean 1
  int iterations = 0;
  // Log-likelihood of the smoothed counts before the first update and
  // after every iteration.
  std::vector<double> log_likelihood;
};

// Minorization-maximization fit. Throws ConvergenceError (carrying the last
// iterate) when the cap is reached, DomainError when the unsmoothed
// comparison graph has no finite maximum.
BradleyTerryFit fit_bradley_terry(const WinMatrix& m, const BradleyTerryOptions& options = {});

double bradley_terry_log_likelihood(const WinMatrix& m, std::span<const double> strengths,
                                    double smoothing);

RankingResult bradley_terry(const WinMatrix& m, const BradleyTerryOptions& options = {});

RankingResult copeland_ranking(const WinMatrix& m);

// p(i, j): strength of the strongest path from i to j in the graph of
// positive pairwise margins; 0 when no such path exists.
SquareMatrix<std::int64_t> schulze_path_strengths(const WinMatrix& m);

RankingResult schulze_ranking(const WinMatrix& m);

enum class MfasWeights { kMargin, kUnit };

MfasWeights parse_mfas_weights(const std::string& name);
std::string to_string(MfasWeights w);

// Weight of the majority edge i -> j; zero when j is not beaten by i.
std::int64_t mfas_edge_weight(const WinMatrix& m, std::size_t i, std::size_t j, MfasWeights weights);

// Total weight of edges pointing from a later to an earlier position.
std::int64_t feedback_cost(const WinMatrix& m, std::span<const std::string> order, MfasWeights weights);

inline constexpr std::size_t kDefaultExactBound = 12;
inline constexpr std::size_t kMaxExactBound = 20;

// Minimum-weight feedback arc ordering by dynamic programming over subsets.
// Ties among optimal orderings resolve to the lexicographically smallest
// sequence under id order. Throws SizeError above `exact_bound`.
RankingResult mfas_exact(const WinMatrix& m, MfasWeights weights = MfasWeights::kMargin,
                         std::size_t exact_bound = kDefaultExactBound);

using GoldScores = std::map<std::string, double>;

// Kendall tau-b between the positions in `order` and the gold scores.
// Empty when the gold scores are all tied.
std::optional<double> kendall_tau(std::span<const std::string> order, const GoldScores& gold);

// Mean human average per system over the corpus documents.
GoldScores gold_ranking(const Corpus& corpus, Criterion criterion);

struct RankingOptions {
  MfasWeights mfas_weights = MfasWeights::kMargin;
  std::size_t exact_bound = kDefaultExactBound;
  BradleyTerryOptions bradley_terry;
};

RankingResult rank(const WinMatrix& m, RankingMethod method, const RankingOptions& options = {});

// Ranks each tournament separately and orders systems by mean position
// (1 = best); scores hold the mean positions.
RankingResult rank_by_document(std::span<const Tournament> tournaments, RankingMethod method,
                               const RankingOptions& options = {});

}  // namespace judge_audit
