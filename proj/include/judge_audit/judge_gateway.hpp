#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "judge_audit/domain.hpp"

struct sqlite3;

namespace judge_audit::gateway {

// Version tag of the bundled prompt assets; recorded in run manifests.
inline constexpr std::string_view kPromptVersion = "v1";

std::string_view pairwise_template();
std::string_view scoring_template();

// Both renderers throw ValidationError on an empty text argument.
std::string render_pairwise_prompt(std::string_view document, std::string_view output_a,
                                   std::string_view output_b, Criterion criterion);
std::string render_scoring_prompt(std::string_view document, std::string_view output,
                                  Criterion criterion);

// "A"/"B" exactly (any case), else the first standalone A/B token once
// surrounding punctuation is stripped. Throws ParseError otherwise.
Side parse_pairwise_response(std::string_view text);

// A lone digit 1-5, else the first digit 1-5 anywhere in the text. Throws
// RangeError when only out-of-range digits occur, ParseError when none do.
int parse_likert_response(std::string_view text);

struct JudgeConfig {
  std::string judge_id;
  std::string model_name;
  std::string endpoint_url;
  double temperature = 0.7;
  int max_retries = 2;
  int parallelism_limit = 4;

  void validate() const;
};

struct JudgeRequest {
  std::string prompt;
  int repetition_index = 0;
};

// Compact, key-sorted JSON of the fields that identify a request.
std::string canonical_request_json(const JudgeConfig& config, const JudgeRequest& request);

// SHA-256 of canonical_request_json.
std::string cache_key(const JudgeConfig& config, const JudgeRequest& request);

struct CacheEntry {
  std::string digest;
  std::string request;  // canonical request JSON
  std::string response;
  std::string timestamp;
};

// Single-file SQLite store: digest -> {request, response, timestamp}.
// All methods are serialized internally.
class ResponseCache {
 public:
  // ":memory:" opens a private in-memory store.
  explicit ResponseCache(const std::string& path);
  ~ResponseCache();
  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<CacheEntry> get(const std::string& digest) const;
  bool contains(const std::string& digest) const;
  void put(const CacheEntry& entry);
  bool erase(const std::string& digest);
  std::size_t size() const;

  // Line-delimited {digest, request, response}, ordered by digest.
  void export_jsonl(std::ostream& out) const;
  // Returns the number of entries imported. Rejects entries whose digest
  // does not match their request.
  std::size_t import_jsonl(std::istream& in);

 private:
  sqlite3* db_ = nullptr;
  mutable std::mutex mutex_;
};

// Sends one prompt to a chat-completion endpoint and returns the reply text.
// Throws TransportError on any failure.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const JudgeConfig& config, const std::string& prompt) = 0;
};

// {model, messages: [{role: "user", content}], temperature} over HTTP(S)
// POST with a bearer token.
class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(std::string api_key);
  std::string complete(const JudgeConfig& config, const std::string& prompt) override;

  static std::string request_body(const JudgeConfig& config, const std::string& prompt);
  static std::string extract_content(const std::string& response_body);

 private:
  std::string api_key_;
};

enum class Mode { kLive, kReplay };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

struct Outcome {
  std::string digest;
  std::optional<std::string> response;
  std::optional<std::string> transport_error;
  bool from_cache = false;
};

struct BatchResult {
  std::vector<Outcome> outcomes;  // aligned with the request batch
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t transport_failures = 0;
};

// Returns true when a response is usable; otherwise live mode re-asks, up
// to max_retries times, and persists the final reply either way.
using ResponseCheck = std::function<bool(const std::string&)>;

// Live: cache misses are dispatched with at most parallelism_limit requests
// in flight and persisted before being returned. Replay: served from the
// cache only; any miss raises MissingCacheError listing every missing digest.
BatchResult execute(std::span<const JudgeRequest> batch, const JudgeConfig& config,
                    ResponseCache& cache, Mode mode, ChatTransport* transport,
                    const ResponseCheck& check = {});

}  // namespace judge_audit::gateway
