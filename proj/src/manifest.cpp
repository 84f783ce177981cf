#include "judge_audit/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "judge_audit/errors.hpp"
#include "judge_audit/sha256.hpp"

namespace judge_audit {
namespace {

using json = nlohmann::json;

const std::set<std::string> kTopLevelFields = {
    "corpus", "subsample", "criteria", "judges", "k", "alphas", "split_count", "split_fraction",
    "seed", "mode", "cache", "output_dir", "ranking", "width_agreement",
    "transport_failure_threshold"};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("manifest field '") + key + "' has the wrong type");
  }
}

Rational parse_alpha(const json& value) {
  Rational alpha;
  if (value.is_string()) {
    alpha = Rational::parse(value.get<std::string>());
  } else if (value.is_number()) {
    alpha = Rational::parse(value.dump());
  } else {
    throw ValidationError("manifest alpha must be a number or decimal string");
  }
  if (alpha <= Rational(0) || alpha >= Rational(1)) {
    throw ValidationError("manifest alpha " + alpha.to_string() + " outside (0, 1)");
  }
  return alpha;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::string to_string(Aggregation a) { return a == Aggregation::kPooled ? "pooled" : "per-document"; }
std::string to_string(WidthGranularity g) { return g == WidthGranularity::kInstance ? "instance" : "document"; }

std::string RunManifest::canonical_json() const {
  json j;
  j["corpus_digest"] = corpus_digest;
  j["subsample"] = {{"docs", docs}, {"systems", systems}, {"doc_selection", to_string(doc_selection)}};
  json crit = json::array();
  for (Criterion c : criteria) crit.push_back(std::string(to_string(c)));
  j["criteria"] = crit;
  json judge_list = json::array();
  for (const auto& judge : judges) {
    judge_list.push_back({{"judge_id", judge.judge_id},
                          {"model_name", judge.model_name},
                          {"endpoint_url", judge.endpoint_url},
                          {"temperature", judge.temperature},
                          {"max_retries", judge.max_retries},
                          {"parallelism_limit", judge.parallelism_limit}});
  }
  j["judges"] = judge_list;
  j["k"] = k;
  json alpha_list = json::array();
  for (const auto& a : alphas) alpha_list.push_back(a.to_string());
  j["alphas"] = alpha_list;
  j["split_count"] = split_count;
  j["split_fraction"] = split_fraction;
  j["seed"] = seed;
  j["mode"] = gateway::to_string(mode);
  j["ranking"] = {{"aggregation", to_string(aggregation)},
                  {"mfas_weights", to_string(ranking.mfas_weights)},
                  {"exact_bound", ranking.exact_bound},
                  {"bt_smoothing", ranking.bradley_terry.smoothing},
                  {"bt_max_iterations", ranking.bradley_terry.max_iterations},
                  {"bt_tolerance", ranking.bradley_terry.tolerance}};
  j["width_agreement"] = to_string(width_granularity);
  j["transport_failure_threshold"] = transport_failure_threshold;
  j["prompt_version"] = std::string(gateway::kPromptVersion);
  j["toolkit_version"] = toolkit_version;
  return j.dump();
}

std::string RunManifest::digest() const { return sha256_hex(canonical_json()); }

RunManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("manifest must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kTopLevelFields.count(key)) throw ValidationError("unknown manifest field '" + key + "'");
  }

  RunManifest m;
  if (!j.contains("corpus")) throw ValidationError("manifest lacks 'corpus'");
  m.corpus_path = resolve(base_dir, get_or<std::string>(j, "corpus", ""));
  if (auto sub = j.find("subsample"); sub != j.end()) {
    m.docs = get_or<std::size_t>(*sub, "docs", 0);
    m.systems = get_or<std::vector<std::string>>(*sub, "systems", {});
    m.doc_selection = parse_doc_selection(get_or<std::string>(*sub, "doc_selection", "file-order"));
  }
  if (j.contains("criteria")) {
    m.criteria.clear();
    for (const auto& name : get_or<std::vector<std::string>>(j, "criteria", {})) {
      m.criteria.push_back(parse_criterion(name));
    }
    if (m.criteria.empty()) throw ValidationError("manifest lists no criteria");
  }
  if (!j.contains("judges") || !j["judges"].is_array() || j["judges"].empty()) {
    throw ValidationError("manifest needs a non-empty 'judges' list");
  }
  std::set<std::string> judge_ids;
  for (const auto& jj : j["judges"]) {
    gateway::JudgeConfig c;
    c.judge_id = get_or<std::string>(jj, "judge_id", "");
    c.model_name = get_or<std::string>(jj, "model_name", "");
    c.endpoint_url = get_or<std::string>(jj, "endpoint_url", "");
    c.temperature = get_or<double>(jj, "temperature", c.temperature);
    c.max_retries = get_or<int>(jj, "max_retries", c.max_retries);
    c.parallelism_limit = get_or<int>(jj, "parallelism_limit", c.parallelism_limit);
    c.validate();
    if (!judge_ids.insert(c.judge_id).second) throw ValidationError("duplicate judge_id " + c.judge_id);
    m.judges.push_back(c);
  }
  m.k = get_or<int>(j, "k", m.k);
  if (m.k < 1) throw ValidationError("k must be positive");
  if (j.contains("alphas")) {
    m.alphas.clear();
    if (!j["alphas"].is_array()) throw ValidationError("manifest 'alphas' must be a list");
    for (const auto& a : j["alphas"]) m.alphas.push_back(parse_alpha(a));
  }
  m.split_count = get_or<int>(j, "split_count", m.split_count);
  if (m.split_count < 1) throw ValidationError("split_count must be positive");
  m.split_fraction = get_or<double>(j, "split_fraction", m.split_fraction);
  if (!(m.split_fraction > 0.0 && m.split_fraction < 1.0)) {
    throw ValidationError("split_fraction must lie in (0, 1)");
  }
  if (!j.contains("seed")) throw ValidationError("manifest lacks the required 'seed'");
  m.seed = get_or<std::uint64_t>(j, "seed", 0);
  m.mode = gateway::parse_mode(get_or<std::string>(j, "mode", "replay"));
  m.cache_path = resolve(base_dir, get_or<std::string>(j, "cache", "cache.sqlite"));
  m.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "out"));
  if (auto r = j.find("ranking"); r != j.end()) {
    const std::string agg = get_or<std::string>(*r, "aggregation", "pooled");
    if (agg == "pooled") {
      m.aggregation = Aggregation::kPooled;
    } else if (agg == "per-document") {
      m.aggregation = Aggregation::kPerDocument;
    } else {
      throw ValidationError("unknown ranking aggregation '" + agg + "'");
    }
    m.ranking.mfas_weights = parse_mfas_weights(get_or<std::string>(*r, "mfas_weights", "margin"));
    m.ranking.exact_bound = get_or<std::size_t>(*r, "exact_bound", kDefaultExactBound);
  }
  const std::string granularity = get_or<std::string>(j, "width_agreement", "instance");
  if (granularity == "instance") {
    m.width_granularity = WidthGranularity::kInstance;
  } else if (granularity == "document") {
    m.width_granularity = WidthGranularity::kDocument;
  } else {
    throw ValidationError("unknown width_agreement granularity '" + granularity + "'");
  }
  m.transport_failure_threshold = get_or<std::size_t>(j, "transport_failure_threshold", 0);
  return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

Corpus load_working_corpus(RunManifest& manifest) {
  Corpus full = load_corpus(manifest.corpus_path.string());
  manifest.corpus_digest = full.content_digest;
  const std::size_t docs = manifest.docs == 0 ? full.doc_count() : manifest.docs;
  const std::vector<std::string> systems = manifest.systems.empty() ? full.system_order : manifest.systems;
  return subsample(full, docs, systems, manifest.doc_selection);
}

}  // namespace judge_audit
