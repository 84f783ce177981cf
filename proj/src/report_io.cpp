#include "judge_audit/report_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "judge_audit/errors.hpp"

namespace judge_audit {
namespace {

using json = nlohmann::json;

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open store " + path.string());
  std::vector<json> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      lines.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lines;
}

template <typename F>
auto with_context(const std::filesystem::path& path, std::size_t line, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + " record " + std::to_string(line) + ": " + e.what());
  }
}

}  // namespace

CsvWriter::CsvWriter(std::ostream& out, const std::string& manifest_digest) : out_(out) {
  out_ << "# manifest_digest=" << manifest_digest << '\n';
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << quote_csv(fields[i]);
  }
  out_ << '\n';
}

std::string fixed(double value, int decimals) {
  std::string s = fmt::format("{:.{}f}", value, decimals);
  // Avoid "-0.000" for values that round to zero.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::kOk:
      return "ok";
    case RecordStatus::kParseFailure:
      return "parse_failure";
    case RecordStatus::kTransportFailure:
      return "transport_failure";
    case RecordStatus::kNoGold:
      return "no_gold";
  }
  return "unknown";
}

RecordStatus parse_record_status(const std::string& s) {
  for (RecordStatus r : {RecordStatus::kOk, RecordStatus::kParseFailure,
                         RecordStatus::kTransportFailure, RecordStatus::kNoGold}) {
    if (to_string(r) == s) return r;
  }
  throw ParseError("unknown record status '" + s + "'");
}

void write_verdict_store(const std::filesystem::path& path, const std::vector<VerdictRecord>& records) {
  std::ostringstream out;
  for (const auto& r : records) {
    json j = {{"doc_id", r.doc_id},
              {"criterion", std::string(to_string(r.criterion))},
              {"judge_id", r.judge_id},
              {"system_a", r.system_a},
              {"system_b", r.system_b},
              {"repetition_index", r.repetition_index},
              {"winner", r.winner ? json(*r.winner == Side::kA ? "A" : "B") : json(nullptr)},
              {"status", to_string(r.status)},
              {"digest", r.digest}};
    out << j.dump() << '\n';
  }
  write_file_atomically(path, out.str());
}

std::vector<VerdictRecord> read_verdict_store(const std::filesystem::path& path) {
  std::vector<VerdictRecord> records;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    records.push_back(with_context(path, line, [&] {
      VerdictRecord r;
      r.doc_id = j.at("doc_id").get<std::string>();
      r.criterion = parse_criterion(j.at("criterion").get<std::string>());
      r.judge_id = j.at("judge_id").get<std::string>();
      r.system_a = j.at("system_a").get<std::string>();
      r.system_b = j.at("system_b").get<std::string>();
      r.repetition_index = j.at("repetition_index").get<int>();
      if (!j.at("winner").is_null()) {
        const std::string w = j.at("winner").get<std::string>();
        if (w != "A" && w != "B") throw ParseError("winner must be A, B or null");
        r.winner = w == "A" ? Side::kA : Side::kB;
      }
      r.status = parse_record_status(j.at("status").get<std::string>());
      r.digest = j.at("digest").get<std::string>();
      return r;
    }));
  }
  return records;
}

void write_score_store(const std::filesystem::path& path, const std::vector<ScoreRecord>& records) {
  std::ostringstream out;
  for (const auto& r : records) {
    json j = {{"doc_id", r.doc_id},
              {"system_id", r.system_id},
              {"criterion", std::string(to_string(r.criterion))},
              {"judge_id", r.judge_id},
              {"judge_score", r.judge_score ? json(*r.judge_score) : json(nullptr)},
              {"gold", r.gold ? json(*r.gold) : json(nullptr)},
              {"status", to_string(r.status)},
              {"digest", r.digest}};
    out << j.dump() << '\n';
  }
  write_file_atomically(path, out.str());
}

std::vector<ScoreRecord> read_score_store(const std::filesystem::path& path) {
  std::vector<ScoreRecord> records;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    records.push_back(with_context(path, line, [&] {
      ScoreRecord r;
      r.doc_id = j.at("doc_id").get<std::string>();
      r.system_id = j.at("system_id").get<std::string>();
      r.criterion = parse_criterion(j.at("criterion").get<std::string>());
      r.judge_id = j.at("judge_id").get<std::string>();
      if (!j.at("judge_score").is_null()) r.judge_score = j.at("judge_score").get<int>();
      if (!j.at("gold").is_null()) r.gold = j.at("gold").get<int>();
      r.status = parse_record_status(j.at("status").get<std::string>());
      r.digest = j.at("digest").get<std::string>();
      return r;
    }));
  }
  return records;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw ValidationError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace judge_audit
