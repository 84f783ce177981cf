#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "judge_audit/dataset.hpp"
#include "judge_audit/judge_gateway.hpp"
#include "judge_audit/ranking.hpp"

namespace judge_audit {

enum class Aggregation { kPooled, kPerDocument };
enum class WidthGranularity { kInstance, kDocument };

// Everything a run depends on. Paths are resolved against the manifest's
// directory; they are excluded from the digest, the corpus content is not.
struct RunManifest {
  std::filesystem::path corpus_path;
  std::string corpus_digest;
  std::size_t docs = 0;  // 0 = every document
  std::vector<std::string> systems;  // empty = every system
  DocSelection doc_selection = DocSelection::kFileOrder;
  std::vector<Criterion> criteria{kAllCriteria.begin(), kAllCriteria.end()};
  std::vector<gateway::JudgeConfig> judges;
  int k = 3;
  std::vector<Rational> alphas = {Rational(5, 100), Rational(10, 100), Rational(15, 100),
                                  Rational(20, 100)};
  int split_count = 20;
  double split_fraction = 0.5;
  std::uint64_t seed = 0;
  gateway::Mode mode = gateway::Mode::kReplay;
  std::filesystem::path cache_path;
  std::filesystem::path output_dir;
  Aggregation aggregation = Aggregation::kPooled;
  RankingOptions ranking;
  WidthGranularity width_granularity = WidthGranularity::kInstance;
  std::size_t transport_failure_threshold = 0;
  std::string toolkit_version = JUDGE_AUDIT_VERSION;

  // Canonical JSON of every field that affects results.
  std::string canonical_json() const;
  std::string digest() const;
};

// Parses the manifest file. The corpus digest is filled in by load_working_corpus.
RunManifest load_manifest(const std::filesystem::path& path);
RunManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);

// Loads and subsamples the corpus named by the manifest, recording its
// digest in the manifest.
Corpus load_working_corpus(RunManifest& manifest);

std::string to_string(Aggregation a);
std::string to_string(WidthGranularity g);

}  // namespace judge_audit
