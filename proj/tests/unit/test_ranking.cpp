#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support/oracles.hpp"
#include "judge_audit/errors.hpp"
#include "judge_audit/ranking.hpp"
#include "judge_audit/report_io.hpp"

using namespace judge_audit;

namespace {

WinMatrix matrix(std::vector<std::string> systems, std::vector<std::vector<std::int64_t>> rows) {
  WinMatrix m;
  m.systems = std::move(systems);
  m.w = SquareMatrix<std::int64_t>(m.systems.size(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) m.w(i, j) = rows[i][j];
  return m;
}

// a beats everyone below it, 3 games per pair, all won.
WinMatrix chain(std::size_t n) {
  WinMatrix m;
  m.systems = oracle::ids(n);
  m.w = SquareMatrix<std::int64_t>(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.w(i, j) = 3;
  return m;
}

WinMatrix equal_cycle() {
  return matrix({"a", "b", "c"}, {{0, 2, 1}, {1, 0, 2}, {2, 1, 0}});
}

}  // namespace

TEST_CASE("win rate") {
  auto r = win_rate_ranking(chain(4));
  CHECK(r.order == oracle::ids(4));
  CHECK(r.scores[0] == doctest::Approx(1.0));
  CHECK(r.scores[3] == doctest::Approx(0.0));

  auto flat = win_rate_ranking(matrix({"b", "a", "c"}, {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}));
  CHECK(flat.order == std::vector<std::string>{"a", "b", "c"});
  for (double s : flat.scores) CHECK(s == doctest::Approx(0.5));

  auto unplayed = win_rate_ranking(matrix({"x", "y"}, {{0, 0}, {0, 0}}));
  CHECK(unplayed.scores == std::vector<double>{0.5, 0.5});
}

TEST_CASE("copeland") {
  auto r = copeland_ranking(chain(4));
  CHECK(r.scores == std::vector<double>{3, 2, 1, 0});
  auto c = copeland_ranking(equal_cycle());
  CHECK(c.scores == std::vector<double>{1, 1, 1});
  CHECK(c.order == std::vector<std::string>{"a", "b", "c"});

  std::mt19937_64 rng(5);
  WinMatrix m = oracle::random_win_matrix(8, 9, rng);
  auto cr = copeland_ranking(m);
  for (std::size_t i = 0; i < 8; ++i) {
    double beaten = 0;
    for (std::size_t j = 0; j < 8; ++j) beaten += (i != j && m.w(i, j) > m.w(j, i)) ? 1 : 0;
    CHECK(cr.scores[i] == beaten);
  }
}

TEST_CASE("bradley terry two systems") {
  WinMatrix m = matrix({"p", "q"}, {{0, 2}, {1, 0}});
  BradleyTerryOptions exact;
  exact.smoothing = 0.0;
  auto fit = fit_bradley_terry(m, exact);
  CHECK(fit.strengths[0] / fit.strengths[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fit.strengths[0] * fit.strengths[1] == doctest::Approx(1.0));

  // Grid search of the likelihood over the ratio.
  double best_ratio = 0, best_ll = -1e300;
  for (int i = 1; i <= 40000; ++i) {
    const double ratio = i * 1e-4;
    const double p = ratio / (1 + ratio);
    const double ll = 2 * std::log(p) + std::log(1 - p);
    if (ll > best_ll) {
      best_ll = ll;
      best_ratio = ratio;
    }
  }
  CHECK(best_ratio == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("bradley terry symmetric matrix") {
  auto fit = fit_bradley_terry(matrix({"a", "b", "c"}, {{0, 2, 2}, {2, 0, 2}, {2, 2, 0}}));
  for (double s : fit.strengths) CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("bradley terry matches a Newton optimiser") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    WinMatrix m = oracle::random_win_matrix(5, 12, rng);
    auto fit = fit_bradley_terry(m);
    auto reference = oracle::bradley_terry_newton(m, 0.01);
    for (std::size_t i = 0; i < 5; ++i) CHECK(fit.strengths[i] == doctest::Approx(reference[i]).epsilon(1e-6));
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
      CHECK(fit.log_likelihood[i] >= fit.log_likelihood[i - 1] - 1e-9);
    }
  }
}

TEST_CASE("bradley terry without smoothing needs strong connectivity") {
  BradleyTerryOptions exact;
  exact.smoothing = 0.0;
  CHECK_THROWS_AS(fit_bradley_terry(chain(3), exact), DomainError);
  CHECK_NOTHROW(fit_bradley_terry(chain(3)));
  CHECK(bradley_terry(chain(3)).order == oracle::ids(3));
}

TEST_CASE("bradley terry iteration cap") {
  BradleyTerryOptions tight;
  tight.max_iterations = 1;
  std::mt19937_64 rng(2);
  try {
    fit_bradley_terry(oracle::random_win_matrix(5, 10, rng), tight);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_iterate().size() == 5);
  }
}

TEST_CASE("schulze") {
  auto t = schulze_ranking(chain(5));
  CHECK(t.order == win_rate_ranking(chain(5)).order);
  auto c = schulze_ranking(equal_cycle());
  CHECK(c.order == std::vector<std::string>{"a", "b", "c"});
  CHECK(c.scores == std::vector<double>{0, 0, 0});

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    WinMatrix m = oracle::random_win_matrix(5, 9, rng);
    CHECK(schulze_path_strengths(m) == oracle::schulze_by_paths(m));
  }
}

TEST_CASE("exact feedback arc set") {
  auto acyclic = mfas_exact(chain(5));
  CHECK(acyclic.feedback_cost == 0);
  CHECK(acyclic.order == oracle::ids(5));

  auto cycle = mfas_exact(matrix({"a", "b", "c"}, {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}));
  CHECK(cycle.feedback_cost == 1);
  // Every rotation costs 1; the smallest sequence wins.
  CHECK(cycle.order == std::vector<std::string>{"a", "b", "c"});

  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    WinMatrix m = oracle::random_win_matrix(7, 6, rng);
    auto exact = mfas_exact(m);
    CHECK(*exact.feedback_cost == oracle::mfas_by_permutation(m, false));
    CHECK(feedback_cost(m, exact.order, MfasWeights::kMargin) == *exact.feedback_cost);
    auto unit = mfas_exact(m, MfasWeights::kUnit);
    CHECK(*unit.feedback_cost == oracle::mfas_by_permutation(m, true));
    auto copeland = rank(m, RankingMethod::kMfasCopeland);
    CHECK(*copeland.feedback_cost >= *exact.feedback_cost);
  }

  CHECK_THROWS_AS(mfas_exact(chain(13)), SizeError);
  CHECK_NOTHROW(mfas_exact(chain(13), MfasWeights::kMargin, 13));
  CHECK_THROWS_AS(mfas_exact(chain(3), MfasWeights::kMargin, 21), SizeError);
}

TEST_CASE("methods agree on acyclic graphs with distinct win rates") {
  WinMatrix m = chain(6);
  const auto expected = win_rate_ranking(m).order;
  for (RankingMethod method : kAllRankingMethods) CHECK(rank(m, method).order == expected);
}

TEST_CASE("relabelling permutes every order") {
  std::mt19937_64 rng(31);
  WinMatrix m = oracle::random_win_matrix(6, 9, rng);
  // Renaming that keeps id order: the output order must map through the renaming.
  WinMatrix renamed = m;
  for (auto& s : renamed.systems) s = "t" + s.substr(1);
  for (RankingMethod method : kAllRankingMethods) {
    auto a = rank(m, method).order;
    auto b = rank(renamed, method).order;
    for (auto& s : a) s = "t" + s.substr(1);
    CHECK(a == b);
  }
}

TEST_CASE("kendall tau against gold") {
  GoldScores gold;
  for (int i = 0; i < 8; ++i) gold["s" + std::to_string(i)] = 8 - i;
  auto ids = oracle::ids(8);
  CHECK(*kendall_tau(ids, gold) == doctest::Approx(1.0));
  std::vector<std::string> reversed(ids.rbegin(), ids.rend());
  CHECK(*kendall_tau(reversed, gold) == doctest::Approx(-1.0));
  // Four adjacent swaps: four discordant pairs.
  std::vector<std::string> swapped = {"s1", "s0", "s3", "s2", "s5", "s4", "s7", "s6"};
  CHECK(*kendall_tau(swapped, gold) == doctest::Approx(20.0 / 28.0));
  CHECK(fixed(*kendall_tau(swapped, gold), 3) == "0.714");
  CHECK_THROWS_AS(kendall_tau(std::vector<std::string>{"s0"}, GoldScores{{"s0", 1}}), DomainError);
}

TEST_CASE("gold ranking averages exact human scores") {
  auto inst = [](std::string doc, std::string sys, std::string v) {
    EvalInstance e{doc, "d", sys, "o", {}};
    e.human_avg[Criterion::kCoherence] = Rational::parse(v);
    return e;
  };
  Corpus c = make_corpus({inst("d1", "a", "3.0"), inst("d1", "b", "5"), inst("d2", "a", "4.0"), inst("d2", "b", "5")});
  auto g = gold_ranking(c, Criterion::kCoherence);
  CHECK(g["a"] == doctest::Approx(3.5));
  CHECK(g["b"] == doctest::Approx(5.0));
  CHECK_THROWS_AS(gold_ranking(c, Criterion::kFluency), ValidationError);
}

TEST_CASE("pooling and per-document ranking") {
  SquareMatrix<char> e(3, 0);
  e(0, 1) = e(1, 2) = e(0, 2) = 1;
  Tournament t = tournament_from_edges({"a", "b", "c"}, e);
  t.wins = SquareMatrix<int>(3, 0);
  t.wins(0, 1) = 2; t.wins(1, 0) = 1;
  t.wins(1, 2) = 3; t.wins(0, 2) = 3;
  std::vector<Tournament> one = {t};
  CHECK(pool_win_matrix(one).w(0, 1) == 2);
  std::vector<Tournament> two = {t, t};
  WinMatrix pooled = pool_win_matrix(two);
  CHECK(pooled.w(0, 1) == 4);
  CHECK(pooled.w(1, 0) == 2);
  auto per_doc = rank_by_document(two, RankingMethod::kWinRate);
  CHECK(per_doc.order == std::vector<std::string>{"a", "b", "c"});
  CHECK(per_doc.scores == std::vector<double>{1, 2, 3});
  Tournament other = t;
  other.systems = {"a", "b", "d"};
  std::vector<Tournament> bad = {t, other};
  CHECK_THROWS_AS(pool_win_matrix(bad), ValidationError);
}

TEST_CASE("method and weight names") {
  CHECK(to_string(RankingMethod::kMfasExact) == "mfas_exact");
  CHECK(parse_mfas_weights("unit") == MfasWeights::kUnit);
  CHECK_THROWS_AS(parse_mfas_weights("square"), ValidationError);
}
