#include "judge_audit/judge_gateway.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <ctime>
#include <exception>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "judge_audit/errors.hpp"
#include "judge_audit/sha256.hpp"
#include "prompt_templates.inc"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace judge_audit::gateway {
namespace {

using json = nlohmann::json;

// Replaces {name} markers in one left-to-right pass, so placeholder-like
// text inside substituted values is left alone.
std::string substitute(std::string_view tmpl,
                       std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tmpl.size() + 1024);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    if (tmpl[pos] == '{') {
      bool replaced = false;
      for (const auto& [name, value] : values) {
        if (tmpl.compare(pos + 1, name.size(), name) == 0 && pos + 1 + name.size() < tmpl.size() &&
            tmpl[pos + 1 + name.size()] == '}') {
          out.append(value);
          pos += name.size() + 2;
          replaced = true;
          break;
        }
      }
      if (replaced) continue;
    }
    out.push_back(tmpl[pos++]);
  }
  return out;
}

void require_text(std::string_view text, const char* what) {
  if (text.empty()) throw ValidationError(std::string("empty ") + what + " passed to prompt renderer");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct StatementDeleter {
  void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
};
using Statement = std::unique_ptr<sqlite3_stmt, StatementDeleter>;

Statement prepare(sqlite3* db, const char* sql) {
  sqlite3_stmt* raw = nullptr;
  if (sqlite3_prepare_v2(db, sql, -1, &raw, nullptr) != SQLITE_OK) {
    throw Error(std::string("cache: ") + sqlite3_errmsg(db));
  }
  return Statement(raw);
}

void bind_text(sqlite3_stmt* stmt, int index, const std::string& value) {
  sqlite3_bind_text(stmt, index, value.data(), static_cast<int>(value.size()), SQLITE_TRANSIENT);
}

std::string column_text(sqlite3_stmt* stmt, int index) {
  const auto* bytes = reinterpret_cast<const char*>(sqlite3_column_text(stmt, index));
  return bytes ? std::string(bytes, static_cast<std::size_t>(sqlite3_column_bytes(stmt, index))) : std::string();
}

}  // namespace

std::string_view pairwise_template() { return kPairwiseTemplate; }
std::string_view scoring_template() { return kScoringTemplate; }

std::string render_pairwise_prompt(std::string_view document, std::string_view output_a,
                                   std::string_view output_b, Criterion criterion) {
  require_text(document, "document");
  require_text(output_a, "output_a");
  require_text(output_b, "output_b");
  return substitute(kPairwiseTemplate, {{"criterion", to_string(criterion)},
                                        {"document", document},
                                        {"system_a", output_a},
                                        {"system_b", output_b}});
}

std::string render_scoring_prompt(std::string_view document, std::string_view output,
                                  Criterion criterion) {
  require_text(document, "document");
  require_text(output, "output");
  return substitute(kScoringTemplate, {{"criterion", to_string(criterion)},
                                       {"document", document},
                                       {"system_output", output}});
}

Side parse_pairwise_response(std::string_view text) {
  std::string_view t = trim(text);
  if (t == "A" || t == "a") return Side::kA;
  if (t == "B" || t == "b") return Side::kB;

  std::size_t pos = 0;
  while (pos < t.size()) {
    while (pos < t.size() && std::isspace(static_cast<unsigned char>(t[pos]))) ++pos;
    std::size_t end = pos;
    while (end < t.size() && !std::isspace(static_cast<unsigned char>(t[end]))) ++end;
    std::string_view token = t.substr(pos, end - pos);
    while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
    while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
    if (token == "A" || token == "a") return Side::kA;
    if (token == "B" || token == "b") return Side::kB;
    pos = end;
  }
  throw ParseError("no A/B verdict in response");
}

int parse_likert_response(std::string_view text) {
  std::string_view t = trim(text);
  if (t.size() == 1 && t[0] >= '1' && t[0] <= '5') return t[0] - '0';
  bool saw_digit = false;
  for (char c : t) {
    if (c >= '1' && c <= '5') return c - '0';
    if (c >= '0' && c <= '9') saw_digit = true;
  }
  if (saw_digit) throw RangeError("response contains only digits outside 1..5");
  throw ParseError("no Likert score in response");
}

void JudgeConfig::validate() const {
  if (judge_id.empty()) throw ValidationError("judge_id must be nonempty");
  if (model_name.empty()) throw ValidationError("judge " + judge_id + ": model_name must be nonempty");
  if (!(temperature >= 0.0)) throw ValidationError("judge " + judge_id + ": temperature must be >= 0");
  if (max_retries < 0) throw ValidationError("judge " + judge_id + ": max_retries must be >= 0");
  if (parallelism_limit < 1) throw ValidationError("judge " + judge_id + ": parallelism_limit must be >= 1");
}

std::string canonical_request_json(const JudgeConfig& config, const JudgeRequest& request) {
  json j = {{"model_name", config.model_name},
            {"prompt", request.prompt},
            {"repetition_index", request.repetition_index},
            {"temperature", config.temperature}};
  return j.dump();
}

std::string cache_key(const JudgeConfig& config, const JudgeRequest& request) {
  return sha256_hex(canonical_request_json(config, request));
}

ResponseCache::ResponseCache(const std::string& path) {
  if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error("cannot open cache " + path + ": " + msg);
  }
  char* err = nullptr;
  const char* schema =
      "PRAGMA journal_mode = WAL;"
      "PRAGMA synchronous = NORMAL;"
      "CREATE TABLE IF NOT EXISTS responses ("
      " digest TEXT PRIMARY KEY,"
      " request TEXT NOT NULL,"
      " response TEXT NOT NULL,"
      " timestamp TEXT NOT NULL)";
  if (sqlite3_exec(db_, schema, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error("cannot initialise cache " + path + ": " + msg);
  }
}

ResponseCache::~ResponseCache() { sqlite3_close(db_); }

std::optional<CacheEntry> ResponseCache::get(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  Statement stmt = prepare(db_, "SELECT request, response, timestamp FROM responses WHERE digest = ?");
  bind_text(stmt.get(), 1, digest);
  if (sqlite3_step(stmt.get()) != SQLITE_ROW) return std::nullopt;
  return CacheEntry{digest, column_text(stmt.get(), 0), column_text(stmt.get(), 1),
                    column_text(stmt.get(), 2)};
}

bool ResponseCache::contains(const std::string& digest) const { return get(digest).has_value(); }

void ResponseCache::put(const CacheEntry& entry) {
  std::lock_guard lock(mutex_);
  Statement stmt = prepare(
      db_, "INSERT OR REPLACE INTO responses (digest, request, response, timestamp) VALUES (?, ?, ?, ?)");
  bind_text(stmt.get(), 1, entry.digest);
  bind_text(stmt.get(), 2, entry.request);
  bind_text(stmt.get(), 3, entry.response);
  bind_text(stmt.get(), 4, entry.timestamp.empty() ? utc_timestamp() : entry.timestamp);
  if (sqlite3_step(stmt.get()) != SQLITE_DONE) throw Error(std::string("cache write: ") + sqlite3_errmsg(db_));
}

bool ResponseCache::erase(const std::string& digest) {
  std::lock_guard lock(mutex_);
  Statement stmt = prepare(db_, "DELETE FROM responses WHERE digest = ?");
  bind_text(stmt.get(), 1, digest);
  if (sqlite3_step(stmt.get()) != SQLITE_DONE) throw Error(std::string("cache delete: ") + sqlite3_errmsg(db_));
  return sqlite3_changes(db_) > 0;
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  Statement stmt = prepare(db_, "SELECT COUNT(*) FROM responses");
  sqlite3_step(stmt.get());
  return static_cast<std::size_t>(sqlite3_column_int64(stmt.get(), 0));
}

void ResponseCache::export_jsonl(std::ostream& out) const {
  std::lock_guard lock(mutex_);
  Statement stmt = prepare(db_, "SELECT digest, request, response FROM responses ORDER BY digest");
  while (sqlite3_step(stmt.get()) == SQLITE_ROW) {
    json line = {{"digest", column_text(stmt.get(), 0)},
                 {"request", json::parse(column_text(stmt.get(), 1))},
                 {"response", column_text(stmt.get(), 2)}};
    out << line.dump() << '\n';
  }
}

std::size_t ResponseCache::import_jsonl(std::istream& in) {
  std::vector<CacheEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("cache export line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("digest") || !j.contains("request") || !j.contains("response") ||
        !j["digest"].is_string() || !j["response"].is_string() || !j["request"].is_object()) {
      throw ParseError("cache export line " + std::to_string(line_no) + ": expected {digest, request, response}");
    }
    CacheEntry e;
    e.digest = j["digest"].get<std::string>();
    e.request = j["request"].dump();
    e.response = j["response"].get<std::string>();
    e.timestamp = "imported";
    if (sha256_hex(e.request) != e.digest) {
      throw ValidationError("cache export line " + std::to_string(line_no) + ": digest does not match request");
    }
    entries.push_back(std::move(e));
  }
  sqlite3_exec(db_, "BEGIN", nullptr, nullptr, nullptr);
  try {
    for (const auto& e : entries) put(e);
  } catch (...) {
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
  sqlite3_exec(db_, "COMMIT", nullptr, nullptr, nullptr);
  return entries.size();
}

HttpChatTransport::HttpChatTransport(std::string api_key) : api_key_(std::move(api_key)) {}

std::string HttpChatTransport::request_body(const JudgeConfig& config, const std::string& prompt) {
  json body = {{"model", config.model_name},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", config.temperature}};
  return body.dump();
}

std::string HttpChatTransport::extract_content(const std::string& response_body) {
  json j;
  try {
    j = json::parse(response_body);
  } catch (const json::parse_error&) {
    throw TransportError("endpoint returned a non-JSON body");
  }
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw TransportError("endpoint response lacks choices[0].message.content");
  }
}

std::string HttpChatTransport::complete(const JudgeConfig& config, const std::string& prompt) {
  const std::string& url = config.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("endpoint URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);
  auto res = client.Post(path, request_body(config, prompt), "application/json");
  if (!res) throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("endpoint " + url + " returned HTTP " + std::to_string(res->status));
  }
  return extract_content(res->body);
}

Mode parse_mode(const std::string& name) {
  if (name == "live") return Mode::kLive;
  if (name == "replay") return Mode::kReplay;
  throw ValidationError("unknown mode '" + name + "' (expected live or replay)");
}

std::string to_string(Mode mode) { return mode == Mode::kLive ? "live" : "replay"; }

BatchResult execute(std::span<const JudgeRequest> batch, const JudgeConfig& config,
                    ResponseCache& cache, Mode mode, ChatTransport* transport,
                    const ResponseCheck& check) {
  config.validate();
  BatchResult result;
  result.outcomes.resize(batch.size());
  // digest -> batch positions; identical requests are dispatched once.
  std::map<std::string, std::vector<std::size_t>> pending;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Outcome& out = result.outcomes[i];
    out.digest = cache_key(config, batch[i]);
    if (auto hit = cache.get(out.digest)) {
      out.response = hit->response;
      out.from_cache = true;
      ++result.cache_hits;
    } else if (mode == Mode::kReplay) {
      missing.push_back(out.digest);
    } else {
      pending[out.digest].push_back(i);
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw MissingCacheError(std::move(missing));
  }
  if (pending.empty()) return result;
  if (transport == nullptr) throw TransportError("live mode requires a transport");

  std::vector<std::pair<std::string, std::vector<std::size_t>>> work(pending.begin(), pending.end());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto drain = [&] {
    for (std::size_t w = next++; w < work.size(); w = next++) {
      const auto& [digest, positions] = work[w];
      const JudgeRequest& request = batch[positions.front()];
      std::optional<std::string> response;
      std::string last_error;
      for (int ask = 0; ask <= config.max_retries; ++ask) {
        std::optional<std::string> reply;
        for (int attempt = 0; attempt <= config.max_retries && !reply; ++attempt) {
          ++calls;
          try {
            reply = transport->complete(config, request.prompt);
          } catch (const TransportError& e) {
            last_error = e.what();
          }
        }
        if (!reply) break;
        response = std::move(reply);
        if (!check || check(*response)) break;
      }
      if (response) cache.put({digest, canonical_request_json(config, request), *response, ""});
      for (std::size_t pos : positions) {
        if (response) {
          result.outcomes[pos].response = response;
        } else {
          result.outcomes[pos].transport_error = last_error;
        }
      }
    }
  };

  auto worker = [&] {
    try {
      drain();
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      next = work.size();
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(config.parallelism_limit), work.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  result.network_calls = calls.load();
  result.transport_failures = 0;
  for (const auto& out : result.outcomes) result.transport_failures += out.transport_error ? 1 : 0;
  return result;
}

}  // namespace judge_audit::gateway
