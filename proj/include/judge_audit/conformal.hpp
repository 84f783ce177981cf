#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "judge_audit/domain.hpp"
#include "judge_audit/matrix.hpp"
#include "judge_audit/rational.hpp"
#include "judge_audit/stats.hpp"

namespace judge_audit::conformal {

// |judge score - gold|, always in 0..4.
int nonconformity(int judge_score, int gold);

struct Threshold {
  Rational alpha;
  // Empty when the quantile index exceeds the calibration size; every
  // prediction set is then the whole scale.
  std::optional<int> q_hat;
  std::size_t calibration_size = 0;

  bool full() const { return !q_hat.has_value(); }
};

// Rank of the order statistic used as threshold: ceil((1 - alpha)(n + 1)).
std::int64_t quantile_index(std::size_t n, const Rational& alpha);

// The quantile_index-th smallest score. Throws CalibrationError on an empty
// list and DomainError unless 0 < alpha < 1.
Threshold conformal_quantile(std::span<const int> scores, const Rational& alpha);

struct PredictionSet {
  int judge_score = 0;
  int lower = kMinLikert;
  int upper = kMaxLikert;

  int width() const { return upper - lower + 1; }
  bool contains(int y) const { return y >= lower && y <= upper; }
  std::vector<int> members() const;
};

PredictionSet prediction_set(int judge_score, const Threshold& threshold);

struct WidthError {
  int width = 0;
  int error = 0;
};

struct ReliabilityBin {
  int width = 0;
  double mae = 0.0;
  double ci95 = 0.0;  // half-width
  std::size_t count = 0;
  bool degenerate = false;
};

// Groups pairs by width; MAE with a normal-approximation 95% interval.
std::vector<ReliabilityBin> reliability_curve(std::span<const WidthError> pairs);

// Spearman correlation between width and absolute error.
stats::Correlation width_error_correlation(std::span<const WidthError> pairs);

struct SplitOptions {
  int split_count = 20;
  double split_fraction = 0.5;  // share of records used for calibration
  std::uint64_t seed = 0;
};

struct SplitEvaluation {
  Rational alpha;
  double coverage = 0.0;
  double avg_set_size = 0.0;
  stats::Correlation width_error;
  // Test-half pairs pooled over all splits.
  std::vector<WidthError> pooled;
  std::vector<ReliabilityBin> curve;
  std::vector<double> coverage_per_split;
  std::vector<double> size_per_split;
  // Mean width each record received over the splits where it was tested;
  // empty for records never drawn into a test half.
  std::vector<std::optional<double>> instance_width;
  int split_count = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMinSplitRecords = 4;

SplitEvaluation run_split_evaluation(std::span<const LikertRecord> records, const Rational& alpha,
                                     const SplitOptions& options = {});

// Per-judge widths over a shared, ordered instance list.
struct JudgeWidths {
  std::string judge_id;
  std::vector<std::string> instance_keys;
  std::vector<double> widths;
};

struct AgreementMatrix {
  std::vector<std::string> judges;
  SquareMatrix<stats::Correlation> cells;  // diagonal fixed at r = 1
};

// Pairwise Spearman correlations of widths. Throws AlignmentError unless all
// judges list the identical instance keys in the same order.
AgreementMatrix inter_judge_width_agreement(std::span<const JudgeWidths> judges);

// Uniform integer in [0, bound) drawn from a 64-bit Mersenne Twister by
// rejection, identical on every platform.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed);
  std::uint64_t below(std::uint64_t bound);
  void shuffle(std::vector<std::size_t>& items);

 private:
  std::mt19937_64 engine_;
};

}  // namespace judge_audit::conformal
