#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "judge_audit/domain.hpp"

namespace judge_audit {

// CSV with a leading "# manifest_digest=<hex>" line. Fields containing a
// comma, quote or newline are quoted.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::string& manifest_digest);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

std::string fixed(double value, int decimals);

enum class RecordStatus { kOk, kParseFailure, kTransportFailure, kNoGold };

std::string to_string(RecordStatus s);
RecordStatus parse_record_status(const std::string& s);

// One pairwise request and what became of it.
struct VerdictRecord {
  std::string doc_id;
  Criterion criterion = Criterion::kCoherence;
  std::string judge_id;
  std::string system_a;
  std::string system_b;
  int repetition_index = 0;
  std::optional<Side> winner;
  RecordStatus status = RecordStatus::kOk;
  std::string digest;
};

struct ScoreRecord {
  std::string doc_id;
  std::string system_id;
  Criterion criterion = Criterion::kCoherence;
  std::string judge_id;
  std::optional<int> judge_score;
  std::optional<int> gold;
  RecordStatus status = RecordStatus::kOk;
  std::string digest;
};

void write_verdict_store(const std::filesystem::path& path, const std::vector<VerdictRecord>& records);
std::vector<VerdictRecord> read_verdict_store(const std::filesystem::path& path);

void write_score_store(const std::filesystem::path& path, const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> read_score_store(const std::filesystem::path& path);

// Writes through a temporary file and renames, so readers never observe a
// partially written report.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace judge_audit
