#include "judge_audit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "judge_audit/errors.hpp"

namespace judge_audit::stats {
namespace {

void require_same_length(std::span<const double> x, std::span<const double> y, std::size_t min_n,
                         const char* what) {
  if (x.size() != y.size()) throw DomainError(std::string(what) + ": inputs differ in length");
  if (x.size() < min_n) {
    throw DomainError(std::string(what) + ": needs at least " + std::to_string(min_n) + " points");
  }
}

// Counts inversions (pairs with y[i] > y[j], i < j) while stably sorting y.
std::int64_t merge_count(std::vector<double>& y, std::vector<double>& scratch, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(y, scratch, lo, mid) + merge_count(y, scratch, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      scratch[k++] = y[j++];
      swaps += static_cast<std::int64_t>(mid - i);
    } else {
      scratch[k++] = y[i++];
    }
  }
  while (i < mid) scratch[k++] = y[i++];
  while (j < hi) scratch[k++] = y[j++];
  std::copy(scratch.begin() + lo, scratch.begin() + hi, y.begin() + lo);
  return swaps;
}

// Sum of t(t-1)/2 over runs of equal values in a sorted sequence.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal_to_prev) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal_to_prev(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  total += run * (run - 1) / 2;
  return total;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    double shared = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = shared;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y, 2, "pearson");
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) throw DomainError("correlation p-value needs at least 3 points");
  const double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) return kPValueFloor;
  double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, kPValueFloor, 1.0);
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y, 3, "spearman");
  Correlation out;
  out.n = x.size();
  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  double r = pearson(rx, ry);
  if (std::isnan(r)) return out;
  out.defined = true;
  out.r = r;
  out.p = correlation_p_value(r, out.n);
  return out;
}

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y, 2, "kendall_tau_b");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const std::int64_t x_ties = tied_pairs(n, [&](std::size_t i) { return xs[i] == xs[i - 1]; });
  const std::int64_t joint_ties =
      tied_pairs(n, [&](std::size_t i) { return xs[i] == xs[i - 1] && ys[i] == ys[i - 1]; });

  std::vector<double> scratch(n);
  const std::int64_t discordant = merge_count(ys, scratch, 0, n);
  const std::int64_t y_ties = tied_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });

  const std::int64_t total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  if (x_ties == total || y_ties == total) return std::nullopt;
  const double numerator =
      static_cast<double>(total - x_ties - y_ties + joint_ties - 2 * discordant);
  const double denominator =
      std::sqrt(static_cast<double>(total - x_ties)) * std::sqrt(static_cast<double>(total - y_ties));
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

MeanInterval mean_ci95(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("mean_ci95 of an empty sample");
  MeanInterval out;
  const double n = static_cast<double>(samples.size());
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() == 1) {
    out.degenerate = true;
    return out;
  }
  double ss = 0.0;
  for (double s : samples) ss += (s - out.mean) * (s - out.mean);
  out.half_width = 1.96 * std::sqrt(ss / n) / std::sqrt(n);
  return out;
}

}  // namespace judge_audit::stats
