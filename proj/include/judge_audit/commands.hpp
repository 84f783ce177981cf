#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "judge_audit/conformal.hpp"
#include "judge_audit/dataset.hpp"
#include "judge_audit/judge_gateway.hpp"
#include "judge_audit/manifest.hpp"
#include "judge_audit/ranking.hpp"
#include "judge_audit/report_io.hpp"
#include "judge_audit/tournament.hpp"

namespace judge_audit {

// Process exit codes of the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitMissingCache = 3;
inline constexpr int kExitTransport = 4;

int exit_code_for(const std::exception& e);

// Output file names inside the run's output directory.
namespace files {
inline constexpr const char* kRunManifest = "run_manifest.json";
inline constexpr const char* kIngestSummary = "ingest_summary.json";
inline constexpr const char* kVerdicts = "verdicts.jsonl";
inline constexpr const char* kScores = "scores.jsonl";
inline constexpr const char* kPairwiseRun = "pairwise_run.json";
inline constexpr const char* kScoringRun = "scoring_run.json";
inline constexpr const char* kViolationsPerDoc = "violations_per_doc.csv";
inline constexpr const char* kViolationDistribution = "violation_distribution.csv";
inline constexpr const char* kViolationsSummary = "violations_summary.csv";
inline constexpr const char* kRankings = "rankings.csv";
inline constexpr const char* kTransitivityWarnings = "transitivity_warnings.csv";
inline constexpr const char* kTransitivitySummary = "transitivity_summary.json";
inline constexpr const char* kConformalCells = "conformal_cells.csv";
inline constexpr const char* kCoverageVsAlpha = "coverage_vs_alpha.csv";
inline constexpr const char* kWidthAgreement = "width_agreement.csv";
inline constexpr const char* kReliabilityCurve = "reliability_curve.csv";
inline constexpr const char* kWidthErrorCorrelation = "width_error_correlation.csv";
inline constexpr const char* kConformalWarnings = "conformal_warnings.csv";
inline constexpr const char* kConformalSummary = "conformal_summary.json";
inline constexpr const char* kReport = "report.json";
}  // namespace files

struct PairwiseRequestSpec {
  std::string doc_id;
  Criterion criterion = Criterion::kCoherence;
  std::string system_a;  // the smaller id of the pair
  std::string system_b;
  int repetition_index = 0;
  std::string prompt;
};

struct ScoringRequestSpec {
  std::string doc_id;
  std::string system_id;
  Criterion criterion = Criterion::kCoherence;
  std::string prompt;
};

// Requests of one judge, in document, pair and repetition order per criterion.
std::vector<PairwiseRequestSpec> pairwise_requests(const Corpus& corpus,
                                                   const std::vector<Criterion>& criteria, int k);
std::vector<ScoringRequestSpec> scoring_requests(const Corpus& corpus,
                                                 const std::vector<Criterion>& criteria);

// ":memory:" store seeded from a line-delimited export when the manifest's
// cache path ends in .jsonl (replay only); the SQLite file otherwise.
std::unique_ptr<gateway::ResponseCache> open_cache(const RunManifest& manifest);

struct RunStats {
  std::size_t requests = 0;
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t parse_failures = 0;
  std::size_t transport_failures = 0;
  int exit_code = kExitOk;
};

// Every command loads the working corpus named by the manifest and writes
// into manifest.output_dir. `transport` is only used in live mode; when null
// an HTTP transport authenticated by JUDGE_API_KEY is created.
int cmd_ingest(RunManifest& manifest, std::ostream& log);
RunStats cmd_run_pairwise(RunManifest& manifest, gateway::ChatTransport* transport, std::ostream& log);
RunStats cmd_run_scoring(RunManifest& manifest, gateway::ChatTransport* transport, std::ostream& log);

struct TransitivityCell {
  std::string judge_id;
  Criterion criterion = Criterion::kCoherence;
  std::vector<std::string> excluded_docs;
  std::optional<ViolationStats> stats;
  std::vector<std::int64_t> cycles;  // aligned with stats->per_doc
  std::vector<RankingResult> rankings;
};

struct TransitivityReport {
  std::vector<TransitivityCell> cells;
};

struct ConformalCell {
  std::string judge_id;
  Criterion criterion = Criterion::kCoherence;
  Rational alpha;
  std::size_t records = 0;
  conformal::SplitEvaluation evaluation;
};

struct AgreementCell {
  Rational alpha;
  Criterion criterion = Criterion::kCoherence;
  conformal::AgreementMatrix matrix;
};

struct ConformalReport {
  std::vector<ConformalCell> cells;
  std::vector<AgreementCell> agreement;
  std::size_t excluded_records = 0;
};

TransitivityReport cmd_analyze_transitivity(RunManifest& manifest, std::ostream& log);
ConformalReport cmd_analyze_conformal(RunManifest& manifest, std::ostream& log);

// Runs whichever analyses have stores available and writes report.json.
int cmd_report(RunManifest& manifest, std::ostream& log);

std::size_t cmd_cache_import(RunManifest& manifest, const std::filesystem::path& jsonl);
std::size_t cmd_cache_export(RunManifest& manifest, const std::filesystem::path& jsonl);

}  // namespace judge_audit
