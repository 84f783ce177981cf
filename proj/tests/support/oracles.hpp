#pragma once

// Slow, independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "judge_audit/conformal.hpp"
#include "judge_audit/ranking.hpp"
#include "judge_audit/tournament.hpp"

namespace oracle {

using judge_audit::SquareMatrix;
using judge_audit::Tournament;
using judge_audit::WinMatrix;

inline std::vector<std::string> ids(std::size_t n, const std::string& prefix = "s") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline Tournament random_tournament(std::size_t n, std::mt19937_64& rng) {
  SquareMatrix<char> e(n, 0);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coin(rng)) e(i, j) = 1; else e(j, i) = 1;
    }
  }
  return judge_audit::tournament_from_edges(ids(n), e);
}

// Every triple checked in both rotations.
inline std::int64_t cycles_by_enumeration(const Tournament& t) {
  const std::size_t n = t.size();
  std::int64_t c = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const auto& e = t.edges;
        if ((e(i, j) && e(j, k) && e(k, i)) || (e(j, i) && e(k, j) && e(i, k))) ++c;
      }
  return c;
}

inline std::int64_t cycles_by_degrees(const Tournament& t) {
  const auto n = static_cast<std::int64_t>(t.size());
  std::int64_t total = n * (n - 1) * (n - 2) / 6;
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::int64_t d = 0;
    for (std::size_t j = 0; j < t.size(); ++j) d += t.edges(i, j) ? 1 : 0;
    total -= d * (d - 1) / 2;
  }
  return total;
}

inline WinMatrix random_win_matrix(std::size_t n, int max_games, std::mt19937_64& rng) {
  WinMatrix m;
  m.systems = ids(n);
  m.w = SquareMatrix<std::int64_t>(n, 0);
  std::uniform_int_distribution<int> games(0, max_games);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const int g = games(rng);
      std::uniform_int_distribution<int> split(0, g);
      const int a = split(rng);
      m.w(i, j) = a;
      m.w(j, i) = g - a;
    }
  return m;
}

// Minimum backward weight over all n! orders.
inline std::int64_t mfas_by_permutation(const WinMatrix& m, bool unit_weights) {
  std::vector<std::size_t> p(m.size());
  std::iota(p.begin(), p.end(), 0);
  std::int64_t best = INT64_MAX;
  do {
    std::int64_t cost = 0;
    for (std::size_t a = 0; a < p.size(); ++a)
      for (std::size_t b = a + 1; b < p.size(); ++b) {
        const std::int64_t back = m.w(p[b], p[a]) - m.w(p[a], p[b]);
        if (back > 0) cost += unit_weights ? 1 : back;
      }
    best = std::min(best, cost);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

// Newton ascent on log-strengths with theta_0 pinned, then rescaled to
// geometric mean 1.
inline std::vector<double> bradley_terry_newton(const WinMatrix& m, double smoothing) {
  const std::size_t n = m.size();
  auto count = [&](std::size_t i, std::size_t j) { return static_cast<double>(m.w(i, j)) + smoothing; };
  auto loglik = [&](const Eigen::VectorXd& th) {
    double ll = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) ll += count(i, j) * (th[i] - std::log(std::exp(th[i]) + std::exp(th[j])));
    return ll;
  };
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double games = count(i, j) + count(j, i);
        const double pij = 1.0 / (1.0 + std::exp(theta[j] - theta[i]));
        g[i] += count(i, j) - games * pij;
        h(i, i) -= games * pij * (1 - pij);
        h(i, j) += games * pij * (1 - pij);
      }
    const auto k = static_cast<Eigen::Index>(n - 1);
    Eigen::VectorXd step_tail = (-h.bottomRightCorner(k, k)).ldlt().solve(g.tail(k));
    Eigen::VectorXd step = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    step.tail(k) = step_tail;
    double t = 1.0;
    const double base = loglik(theta);
    while (t > 1e-12 && loglik(theta + t * step) < base) t /= 2;
    theta += t * step;
    if (step.cwiseAbs().maxCoeff() * t < 1e-14) break;
  }
  theta.array() -= theta.mean();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(theta[static_cast<Eigen::Index>(i)]);
  return out;
}

// Strongest bottleneck over every simple path, by depth-first enumeration.
inline SquareMatrix<std::int64_t> schulze_by_paths(const WinMatrix& m) {
  const std::size_t n = m.size();
  auto margin = [&](std::size_t a, std::size_t b) { return std::max<std::int64_t>(m.w(a, b) - m.w(b, a), 0); };
  SquareMatrix<std::int64_t> best(n, 0);
  std::vector<char> on_path(n, 0);
  std::function<void(std::size_t, std::size_t, std::int64_t)> walk = [&](std::size_t start, std::size_t u, std::int64_t width) {
    for (std::size_t v = 0; v < n; ++v) {
      if (on_path[v]) continue;
      const std::int64_t w = std::min(width, margin(u, v));
      best(start, v) = std::max(best(start, v), w);
      on_path[v] = 1;
      walk(start, v, w);
      on_path[v] = 0;
    }
  };
  for (std::size_t s = 0; s < n; ++s) {
    on_path[s] = 1;
    walk(s, s, INT64_MAX);
    on_path[s] = 0;
    best(s, s) = 0;
  }
  return best;
}

inline double kendall_by_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0, discordant = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0) tx += 1;
      if (dy == 0) ty += 1;
      if (dx * dy > 0) concordant += 1;
      if (dx * dy < 0) discordant += 1;
    }
  const double pairs = static_cast<double>(x.size() * (x.size() - 1) / 2);
  return (concordant - discordant) / std::sqrt((pairs - tx) * (pairs - ty));
}

// Rank = 1 + #smaller + (#equal - 1) / 2, then Pearson.
inline double spearman_by_counting(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double u : v) {
        if (u < v[i]) less += 1;
        if (u == v[i]) equal += 1;
      }
      r[i] = 1 + less + (equal - 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Empty optional stands for the whole-scale threshold.
inline std::optional<int> quantile_by_sorting(std::vector<int> scores, std::int64_t alpha_num,
                                              std::int64_t alpha_den) {
  std::sort(scores.begin(), scores.end());
  const auto n = static_cast<std::int64_t>(scores.size());
  const std::int64_t numer = (alpha_den - alpha_num) * (n + 1);
  const std::int64_t index = (numer + alpha_den - 1) / alpha_den;
  if (index > n) return std::nullopt;
  return scores[static_cast<std::size_t>(index - 1)];
}

}  // namespace oracle
