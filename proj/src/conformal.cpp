#include "judge_audit/conformal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "judge_audit/errors.hpp"

namespace judge_audit::conformal {

int nonconformity(int judge_score, int gold) {
  validate_likert(judge_score);
  validate_likert(gold);
  return std::abs(judge_score - gold);
}

std::int64_t quantile_index(std::size_t n, const Rational& alpha) {
  return ((Rational(1) - alpha) * Rational(static_cast<std::int64_t>(n) + 1)).ceil();
}

Threshold conformal_quantile(std::span<const int> scores, const Rational& alpha) {
  if (scores.empty()) throw CalibrationError("empty calibration set");
  if (alpha <= Rational(0) || alpha >= Rational(1)) {
    throw DomainError("miscoverage level " + alpha.to_string() + " outside (0, 1)");
  }
  Threshold t;
  t.alpha = alpha;
  t.calibration_size = scores.size();
  const std::int64_t index = quantile_index(scores.size(), alpha);
  if (index > static_cast<std::int64_t>(scores.size())) return t;

  // Scores live in 0..4, so the order statistic falls out of a histogram.
  std::array<std::int64_t, kMaxLikert> histogram{};
  for (int s : scores) {
    if (s < 0 || s > kMaxLikert - kMinLikert) {
      throw DomainError("nonconformity score " + std::to_string(s) + " outside 0..4");
    }
    ++histogram[static_cast<std::size_t>(s)];
  }
  std::int64_t seen = 0;
  for (int value = 0; value < kMaxLikert; ++value) {
    seen += histogram[static_cast<std::size_t>(value)];
    if (seen >= index) {
      t.q_hat = value;
      break;
    }
  }
  return t;
}

std::vector<int> PredictionSet::members() const {
  std::vector<int> out;
  for (int y = lower; y <= upper; ++y) out.push_back(y);
  return out;
}

PredictionSet prediction_set(int judge_score, const Threshold& threshold) {
  validate_likert(judge_score);
  PredictionSet set;
  set.judge_score = judge_score;
  if (threshold.full()) return set;
  set.lower = std::max(kMinLikert, judge_score - *threshold.q_hat);
  set.upper = std::min(kMaxLikert, judge_score + *threshold.q_hat);
  return set;
}

std::vector<ReliabilityBin> reliability_curve(std::span<const WidthError> pairs) {
  std::map<int, std::vector<double>> by_width;
  for (const auto& p : pairs) by_width[p.width].push_back(static_cast<double>(p.error));
  std::vector<ReliabilityBin> curve;
  for (const auto& [width, errors] : by_width) {
    stats::MeanInterval ci = stats::mean_ci95(errors);
    curve.push_back({width, ci.mean, ci.half_width, errors.size(), ci.degenerate});
  }
  return curve;
}

stats::Correlation width_error_correlation(std::span<const WidthError> pairs) {
  if (pairs.size() < 3) {
    stats::Correlation undefined;
    undefined.n = pairs.size();
    return undefined;
  }
  std::vector<double> widths;
  std::vector<double> errors;
  widths.reserve(pairs.size());
  errors.reserve(pairs.size());
  for (const auto& p : pairs) {
    widths.push_back(p.width);
    errors.push_back(p.error);
  }
  return stats::spearman(widths, errors);
}

SplitRng::SplitRng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SplitRng::below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return draw % bound;
}

void SplitRng::shuffle(std::vector<std::size_t>& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(below(i));
    std::swap(items[i - 1], items[j]);
  }
}

SplitEvaluation run_split_evaluation(std::span<const LikertRecord> records, const Rational& alpha,
                                     const SplitOptions& options) {
  if (records.size() < kMinSplitRecords) {
    throw CalibrationError("split evaluation needs at least " + std::to_string(kMinSplitRecords) +
                           " records, got " + std::to_string(records.size()));
  }
  if (options.split_count < 1) throw DomainError("split count must be positive");
  if (!(options.split_fraction > 0.0 && options.split_fraction < 1.0)) {
    throw DomainError("split fraction must lie in (0, 1)");
  }
  const std::size_t n = records.size();
  const auto calibration_size =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * options.split_fraction));
  if (calibration_size == 0 || calibration_size >= n) {
    throw CalibrationError("split fraction leaves an empty calibration or test half");
  }

  std::vector<int> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = nonconformity(records[i].judge_score, records[i].gold);
  }

  SplitEvaluation eval;
  eval.alpha = alpha;
  eval.split_count = options.split_count;
  eval.seed = options.seed;
  std::vector<double> width_sum(n, 0.0);
  std::vector<int> tested(n, 0);

  SplitRng rng(options.seed);
  std::vector<int> calibration_scores(calibration_size);
  for (int split = 0; split < options.split_count; ++split) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (std::size_t i = 0; i < calibration_size; ++i) calibration_scores[i] = residual[perm[i]];
    const Threshold threshold = conformal_quantile(calibration_scores, alpha);

    std::size_t covered = 0;
    std::size_t size_total = 0;
    for (std::size_t i = calibration_size; i < n; ++i) {
      const std::size_t r = perm[i];
      const PredictionSet set = prediction_set(records[r].judge_score, threshold);
      covered += set.contains(records[r].gold) ? 1 : 0;
      size_total += static_cast<std::size_t>(set.width());
      eval.pooled.push_back({set.width(), residual[r]});
      width_sum[r] += set.width();
      ++tested[r];
    }
    const auto test_size = static_cast<double>(n - calibration_size);
    eval.coverage_per_split.push_back(static_cast<double>(covered) / test_size);
    eval.size_per_split.push_back(static_cast<double>(size_total) / test_size);
  }

  const auto splits = static_cast<double>(options.split_count);
  eval.coverage =
      std::accumulate(eval.coverage_per_split.begin(), eval.coverage_per_split.end(), 0.0) / splits;
  eval.avg_set_size =
      std::accumulate(eval.size_per_split.begin(), eval.size_per_split.end(), 0.0) / splits;
  eval.width_error = width_error_correlation(eval.pooled);
  eval.curve = reliability_curve(eval.pooled);
  eval.instance_width.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (tested[i] > 0) eval.instance_width[i] = width_sum[i] / tested[i];
  }
  return eval;
}

AgreementMatrix inter_judge_width_agreement(std::span<const JudgeWidths> judges) {
  AgreementMatrix out;
  const std::size_t m = judges.size();
  out.cells = SquareMatrix<stats::Correlation>(m);
  for (const auto& j : judges) {
    if (j.widths.size() != j.instance_keys.size()) {
      throw AlignmentError("judge " + j.judge_id + " has " + std::to_string(j.widths.size()) +
                           " widths for " + std::to_string(j.instance_keys.size()) + " instances");
    }
    if (j.instance_keys != judges.front().instance_keys) {
      throw AlignmentError("judge " + j.judge_id + " covers a different instance list than judge " +
                           judges.front().judge_id);
    }
    out.judges.push_back(j.judge_id);
  }
  for (std::size_t a = 0; a < m; ++a) {
    stats::Correlation self;
    self.r = 1.0;
    self.p = 0.0;
    self.n = judges[a].widths.size();
    self.defined = true;
    out.cells(a, a) = self;
    for (std::size_t b = a + 1; b < m; ++b) {
      stats::Correlation c;
      c.n = judges[a].widths.size();
      if (c.n >= 3) c = stats::spearman(judges[a].widths, judges[b].widths);
      out.cells(a, b) = c;
      out.cells(b, a) = c;
    }
  }
  return out;
}

}  // namespace judge_audit::conformal
