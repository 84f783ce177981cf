#pragma once

#include <optional>
#include <span>
#include <vector>

namespace judge_audit::stats {

// Smallest p-value ever reported; two-sided t-test tails below this are
// clamped so that reports stay finite and comparable.
inline constexpr double kPValueFloor = 1e-300;

// 1-based average ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct Correlation {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  // False when either input has zero rank variance; r and p are then
  // meaningless and left at their defaults.
  bool defined = false;
};

double pearson(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation (Pearson on average ranks) with a two-sided
// p-value from t = r * sqrt((n - 2) / (1 - r^2)) on n - 2 degrees of freedom.
Correlation spearman(std::span<const double> x, std::span<const double> y);

// Two-sided p-value of a correlation r over n points via the t approximation.
double correlation_p_value(double r, std::size_t n);

// Kendall tau-b. Empty when either vector is entirely tied.
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

struct MeanInterval {
  double mean = 0.0;
  double half_width = 0.0;
  bool degenerate = false;  // single sample: half_width forced to 0
};

// mean +- 1.96 * sd / sqrt(n), sd being the population standard deviation.
MeanInterval mean_ci95(std::span<const double> samples);

}  // namespace judge_audit::stats
