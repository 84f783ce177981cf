#include "judge_audit/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "judge_audit/errors.hpp"
#include "judge_audit/stats.hpp"

namespace judge_audit {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string sci(double v) {
  if (std::isnan(v)) return "";
  return fmt::format("{:.6e}", v);
}

std::string opt_fixed(const std::optional<double>& v, int decimals) {
  return v ? fixed(*v, decimals) : "";
}

std::string percent(const Rational& r) { return fixed(r.to_double() * 100.0, 1) + "%"; }

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void write_csv(const fs::path& path, const std::string& digest,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  CsvWriter csv(out, digest);
  for (const auto& row : rows) csv.row(row);
  write_file_atomically(path, out.str());
}

void write_json(const fs::path& path, const json& j) {
  write_file_atomically(path, j.dump(2) + "\n");
}

json manifest_json(const RunManifest& m) { return json::parse(m.canonical_json()); }

void write_run_manifest(const RunManifest& m) {
  write_json(m.output_dir / files::kRunManifest,
             {{"manifest_digest", m.digest()}, {"manifest", manifest_json(m)}});
}

std::unique_ptr<gateway::ChatTransport> http_transport_from_env() {
  const char* key = std::getenv("JUDGE_API_KEY");
  if (key == nullptr || *key == '\0') {
    throw ValidationError("live mode needs the JUDGE_API_KEY environment variable");
  }
  return std::make_unique<gateway::HttpChatTransport>(key);
}

// Digests of every request the run needs that the cache cannot serve.
std::vector<std::string> missing_digests(const RunManifest& m, const gateway::ResponseCache& cache,
                                         const std::vector<gateway::JudgeRequest>& batch) {
  std::set<std::string> missing;
  for (const auto& judge : m.judges) {
    for (const auto& req : batch) {
      std::string digest = gateway::cache_key(judge, req);
      if (!cache.contains(digest)) missing.insert(std::move(digest));
    }
  }
  return {missing.begin(), missing.end()};
}

// Shared driver of both collection commands. `consume` turns each outcome
// into a store record and reports whether it parsed.
template <typename Consume>
RunStats run_protocol(RunManifest& m, gateway::ChatTransport* transport,
                      const std::vector<gateway::JudgeRequest>& batch,
                      const gateway::ResponseCheck& check, Consume&& consume, std::ostream& log) {
  for (const auto& judge : m.judges) judge.validate();
  auto cache = open_cache(m);
  if (m.mode == gateway::Mode::kReplay) {
    auto missing = missing_digests(m, *cache, batch);
    if (!missing.empty()) throw MissingCacheError(std::move(missing));
  }
  std::unique_ptr<gateway::ChatTransport> owned;
  if (m.mode == gateway::Mode::kLive && transport == nullptr) {
    owned = http_transport_from_env();
    transport = owned.get();
  }

  RunStats stats;
  for (const auto& judge : m.judges) {
    gateway::BatchResult result = gateway::execute(batch, judge, *cache, m.mode, transport, check);
    stats.requests += batch.size();
    stats.network_calls += result.network_calls;
    stats.cache_hits += result.cache_hits;
    stats.transport_failures += result.transport_failures;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const gateway::Outcome& o = result.outcomes[i];
      if (o.transport_error) {
        log << "warning: judge " << judge.judge_id << " request " << o.digest
            << " failed: " << *o.transport_error << '\n';
      }
      if (!consume(judge, i, o)) {
        if (!o.transport_error) {
          ++stats.parse_failures;
          log << "warning: judge " << judge.judge_id << " request " << o.digest
              << " unparseable after retries\n";
        }
      }
    }
  }
  if (stats.transport_failures > m.transport_failure_threshold) stats.exit_code = kExitTransport;
  return stats;
}

json stats_json(const RunStats& s) {
  return {{"requests", s.requests},
          {"network_calls", s.network_calls},
          {"cache_hits", s.cache_hits},
          {"parse_failures", s.parse_failures},
          {"transport_failures", s.transport_failures}};
}

std::string cell_label(const std::string& judge, Criterion c) {
  return judge + "/" + std::string(to_string(c));
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingCacheError*>(&e)) return kExitMissingCache;
  if (dynamic_cast<const TransportError*>(&e)) return kExitTransport;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) || dynamic_cast<const SizeError*>(&e)) {
    return kExitValidation;
  }
  return kExitFailure;
}

std::vector<PairwiseRequestSpec> pairwise_requests(const Corpus& corpus,
                                                   const std::vector<Criterion>& criteria, int k) {
  std::vector<PairwiseRequestSpec> out;
  for (Criterion c : criteria) {
    for (const auto& doc : corpus.doc_order) {
      auto insts = corpus.instances_for(doc);
      for (std::size_t i = 0; i < insts.size(); ++i) {
        for (std::size_t j = i + 1; j < insts.size(); ++j) {
          const EvalInstance* a = insts[i];
          const EvalInstance* b = insts[j];
          if (id_less(b->system_id, a->system_id)) std::swap(a, b);
          std::string prompt = gateway::render_pairwise_prompt(a->document, a->output, b->output, c);
          for (int r = 0; r < k; ++r) {
            out.push_back({doc, c, a->system_id, b->system_id, r, prompt});
          }
        }
      }
    }
  }
  return out;
}

std::vector<ScoringRequestSpec> scoring_requests(const Corpus& corpus,
                                                 const std::vector<Criterion>& criteria) {
  std::vector<ScoringRequestSpec> out;
  for (Criterion c : criteria) {
    for (const auto& doc : corpus.doc_order) {
      for (const EvalInstance* inst : corpus.instances_for(doc)) {
        out.push_back({doc, inst->system_id, c,
                       gateway::render_scoring_prompt(inst->document, inst->output, c)});
      }
    }
  }
  return out;
}

std::unique_ptr<gateway::ResponseCache> open_cache(const RunManifest& manifest) {
  if (manifest.cache_path.empty()) throw ValidationError("manifest names no cache");
  if (manifest.cache_path.extension() == ".jsonl") {
    if (manifest.mode == gateway::Mode::kLive) {
      throw ValidationError("a .jsonl cache export is read-only; live mode needs a SQLite cache");
    }
    auto cache = std::make_unique<gateway::ResponseCache>(":memory:");
    std::ifstream in(manifest.cache_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open cache " + manifest.cache_path.string());
    cache->import_jsonl(in);
    return cache;
  }
  if (manifest.cache_path.has_parent_path()) fs::create_directories(manifest.cache_path.parent_path());
  return std::make_unique<gateway::ResponseCache>(manifest.cache_path.string());
}

int cmd_ingest(RunManifest& manifest, std::ostream& log) {
  Corpus corpus = load_working_corpus(manifest);
  const auto budget = protocol_budget(corpus, static_cast<int>(manifest.criteria.size()),
                                      static_cast<int>(manifest.judges.size()), manifest.k);
  std::size_t annotated = 0;
  for (const auto& inst : corpus.instances) {
    bool all = true;
    for (Criterion c : manifest.criteria) all = all && inst.human_avg.count(c);
    annotated += all ? 1 : 0;
  }
  const std::size_t expected = corpus.doc_count() * corpus.system_count();
  if (corpus.instances.size() != expected) {
    log << "warning: " << expected - corpus.instances.size()
        << " (document, system) instances missing from the working set\n";
  }
  json summary = {{"manifest_digest", manifest.digest()},
                  {"corpus_digest", manifest.corpus_digest},
                  {"documents", corpus.doc_count()},
                  {"systems", corpus.system_order},
                  {"instances", corpus.instances.size()},
                  {"annotated_instances", annotated},
                  {"pairwise_calls", budget.pairwise_calls},
                  {"scoring_calls", budget.scoring_calls}};
  write_run_manifest(manifest);
  write_json(manifest.output_dir / files::kIngestSummary, summary);
  log << corpus.doc_count() << " documents, " << corpus.system_count() << " systems, "
      << budget.pairwise_calls << " pairwise and " << budget.scoring_calls << " scoring calls\n";
  return kExitOk;
}

RunStats cmd_run_pairwise(RunManifest& manifest, gateway::ChatTransport* transport, std::ostream& log) {
  Corpus corpus = load_working_corpus(manifest);
  const auto specs = pairwise_requests(corpus, manifest.criteria, manifest.k);
  std::vector<gateway::JudgeRequest> batch;
  batch.reserve(specs.size());
  for (const auto& s : specs) batch.push_back({s.prompt, s.repetition_index});

  std::vector<VerdictRecord> records;
  auto check = [](const std::string& text) {
    try {
      gateway::parse_pairwise_response(text);
      return true;
    } catch (const ParseError&) {
      return false;
    }
  };
  auto consume = [&](const gateway::JudgeConfig& judge, std::size_t i, const gateway::Outcome& o) {
    const auto& s = specs[i];
    VerdictRecord r{s.doc_id, s.criterion, judge.judge_id, s.system_a, s.system_b,
                    s.repetition_index, std::nullopt, RecordStatus::kOk, o.digest};
    bool parsed = false;
    if (!o.response) {
      r.status = RecordStatus::kTransportFailure;
    } else {
      try {
        r.winner = gateway::parse_pairwise_response(*o.response);
        parsed = true;
      } catch (const ParseError&) {
        r.status = RecordStatus::kParseFailure;
      }
    }
    records.push_back(std::move(r));
    return parsed;
  };
  RunStats stats = run_protocol(manifest, transport, batch, check, consume, log);

  const auto budget = protocol_budget(corpus, static_cast<int>(manifest.criteria.size()),
                                      static_cast<int>(manifest.judges.size()), manifest.k);
  write_run_manifest(manifest);
  write_verdict_store(manifest.output_dir / files::kVerdicts, records);
  json run = stats_json(stats);
  run["manifest_digest"] = manifest.digest();
  run["budget_pairwise_calls"] = budget.pairwise_calls;
  write_json(manifest.output_dir / files::kPairwiseRun, run);
  log << stats.requests << " pairwise requests, " << stats.network_calls << " network calls, "
      << stats.cache_hits << " cache hits, " << stats.parse_failures << " parse failures, "
      << stats.transport_failures << " transport failures\n";
  return stats;
}

RunStats cmd_run_scoring(RunManifest& manifest, gateway::ChatTransport* transport, std::ostream& log) {
  Corpus corpus = load_working_corpus(manifest);
  const auto specs = scoring_requests(corpus, manifest.criteria);
  std::vector<gateway::JudgeRequest> batch;
  batch.reserve(specs.size());
  for (const auto& s : specs) batch.push_back({s.prompt, 0});

  std::vector<ScoreRecord> records;
  auto check = [](const std::string& text) {
    try {
      gateway::parse_likert_response(text);
      return true;
    } catch (const ParseError&) {
      return false;
    }
  };
  auto consume = [&](const gateway::JudgeConfig& judge, std::size_t i, const gateway::Outcome& o) {
    const auto& s = specs[i];
    ScoreRecord r{s.doc_id, s.system_id, s.criterion, judge.judge_id,
                  std::nullopt, std::nullopt, RecordStatus::kOk, o.digest};
    const EvalInstance* inst = corpus.find(s.doc_id, s.system_id);
    if (auto it = inst->human_avg.find(s.criterion); it != inst->human_avg.end()) {
      r.gold = gold_label(it->second);
    }
    bool parsed = false;
    if (!o.response) {
      r.status = RecordStatus::kTransportFailure;
    } else {
      try {
        r.judge_score = gateway::parse_likert_response(*o.response);
        parsed = true;
      } catch (const ParseError&) {
        r.status = RecordStatus::kParseFailure;
      }
    }
    if (r.status == RecordStatus::kOk && !r.gold) r.status = RecordStatus::kNoGold;
    records.push_back(std::move(r));
    return parsed;
  };
  RunStats stats = run_protocol(manifest, transport, batch, check, consume, log);

  const auto budget = protocol_budget(corpus, static_cast<int>(manifest.criteria.size()),
                                      static_cast<int>(manifest.judges.size()), manifest.k);
  write_run_manifest(manifest);
  write_score_store(manifest.output_dir / files::kScores, records);
  json run = stats_json(stats);
  run["manifest_digest"] = manifest.digest();
  run["budget_scoring_calls"] = budget.scoring_calls;
  write_json(manifest.output_dir / files::kScoringRun, run);
  log << stats.requests << " scoring requests, " << stats.network_calls << " network calls, "
      << stats.cache_hits << " cache hits, " << stats.parse_failures << " parse failures, "
      << stats.transport_failures << " transport failures\n";
  return stats;
}

TransitivityReport cmd_analyze_transitivity(RunManifest& manifest, std::ostream& log) {
  Corpus corpus = load_working_corpus(manifest);
  const std::string digest = manifest.digest();
  const auto records = read_verdict_store(manifest.output_dir / files::kVerdicts);

  using Key = std::tuple<std::string, Criterion, std::string>;  // judge, criterion, doc
  std::map<Key, std::vector<PairwiseVerdict>> grouped;
  std::map<Key, std::size_t> failed;
  for (const auto& r : records) {
    Key key{r.judge_id, r.criterion, r.doc_id};
    if (r.status == RecordStatus::kOk && r.winner) {
      grouped[key].push_back({r.doc_id, r.criterion, r.judge_id, r.system_a, r.system_b,
                              r.repetition_index, *r.winner});
    } else {
      ++failed[key];
    }
  }

  std::vector<std::vector<std::string>> per_doc_rows = {
      {"doc_id", "judge_id", "criterion", "n", "cycles", "rho", "rho_exact"}};
  std::vector<std::vector<std::string>> dist_rows = {
      {"judge_id", "criterion", "doc_id", "rho", "random_baseline"}};
  std::vector<std::vector<std::string>> summary_rows = {
      {"judge_id", "criterion", "docs", "excluded_docs", "mean_rho", "frac_docs_with_violation",
       "max_rho", "median_rho", "table_mean_rho", "table_pct_docs_with_violation",
       "table_max_rho", "table_median_rho"}};
  std::vector<std::vector<std::string>> ranking_rows = {
      {"judge_id", "criterion", "aggregation", "method", "order", "scores", "tau_vs_gold",
       "feedback_cost", "mfas_weights"}};
  std::vector<std::vector<std::string>> warning_rows = {
      {"judge_id", "criterion", "doc_id", "kind", "detail"}};
  auto warn = [&](const std::string& judge, Criterion c, const std::string& doc,
                  const std::string& kind, const std::string& detail) {
    warning_rows.push_back({judge, std::string(to_string(c)), doc, kind, detail});
    log << "warning: " << cell_label(judge, c) << (doc.empty() ? "" : " doc " + doc) << ": "
        << kind << " (" << detail << ")\n";
  };

  TransitivityReport report;
  json cells_json = json::array();
  for (const auto& judge : manifest.judges) {
    for (Criterion c : manifest.criteria) {
      TransitivityCell cell{judge.judge_id, c, {}, std::nullopt, {}, {}};
      const std::string crit(to_string(c));
      std::vector<Tournament> tournaments;
      for (const auto& doc : corpus.doc_order) {
        Key key{judge.judge_id, c, doc};
        if (auto f = failed.find(key); f != failed.end()) {
          warn(judge.judge_id, c, doc, "failed_verdicts", std::to_string(f->second) + " verdicts unusable");
        }
        auto g = grouped.find(key);
        std::vector<PairwiseVerdict> none;
        const auto& verdicts = g == grouped.end() ? none : g->second;
        std::vector<std::string> systems;
        for (const EvalInstance* inst : corpus.instances_for(doc)) systems.push_back(inst->system_id);
        try {
          Tournament t = build_tournament(verdicts, systems, manifest.k);
          t.doc_id = doc;
          t.judge_id = judge.judge_id;
          t.criterion = c;
          for (const auto& tb : t.tie_breaks) {
            warn(judge.judge_id, c, doc, "tie_break",
                 tb.winner + " over " + tb.loser + " at " + std::to_string(tb.wins_each) + " wins each");
          }
          tournaments.push_back(std::move(t));
        } catch (const IncompleteTournamentError& e) {
          cell.excluded_docs.push_back(doc);
          warn(judge.judge_id, c, doc, "incomplete_tournament", e.what());
        }
      }

      std::vector<DocRate> rates;
      for (const auto& t : tournaments) {
        if (t.size() < 3) {
          warn(judge.judge_id, c, t.doc_id, "too_few_systems", std::to_string(t.size()) + " systems");
          continue;
        }
        const std::int64_t cycles = count_directed_3cycles(t);
        const Rational rho = violation_rate(t);
        rates.push_back({t.doc_id, rho});
        cell.cycles.push_back(cycles);
        per_doc_rows.push_back({t.doc_id, judge.judge_id, crit, std::to_string(t.size()),
                                std::to_string(cycles), fixed(rho.to_double(), 6), rho.to_string()});
        dist_rows.push_back({judge.judge_id, crit, t.doc_id, fixed(rho.to_double(), 6),
                             fixed(kRandomBaselineRate, 2)});
      }
      if (!rates.empty()) {
        cell.stats = corpus_violation_stats(rates);
        const auto& s = *cell.stats;
        summary_rows.push_back({judge.judge_id, crit, std::to_string(s.per_doc.size()),
                                std::to_string(cell.excluded_docs.size()),
                                fixed(s.aggregate_mean.to_double(), 6),
                                fixed(s.frac_docs_with_violation.to_double(), 6),
                                fixed(s.max_rho.to_double(), 6), fixed(s.median_rho.to_double(), 6),
                                fixed(s.aggregate_mean.to_double(), 3),
                                percent(s.frac_docs_with_violation), percent(s.max_rho),
                                percent(s.median_rho)});
      } else {
        warn(judge.judge_id, c, "", "no_usable_documents", "cell skipped");
      }

      std::optional<GoldScores> gold;
      try {
        gold = gold_ranking(corpus, c);
      } catch (const Error& e) {
        warn(judge.judge_id, c, "", "no_gold_ranking", e.what());
      }
      if (!tournaments.empty()) {
        WinMatrix pooled = pool_win_matrix(tournaments);
        for (RankingMethod method : kAllRankingMethods) {
          RankingResult r;
          try {
            r = manifest.aggregation == Aggregation::kPooled
                    ? rank(pooled, method, manifest.ranking)
                    : rank_by_document(tournaments, method, manifest.ranking);
          } catch (const SizeError& e) {
            warn(judge.judge_id, c, "", "ranking_skipped", to_string(method) + ": " + e.what());
            continue;
          } catch (const ConvergenceError& e) {
            warn(judge.judge_id, c, "", "ranking_skipped", to_string(method) + ": " + e.what());
            continue;
          }
          if (gold) r.tau_vs_gold = kendall_tau(r.order, *gold);
          std::vector<std::string> score_text;
          if (!r.scores.empty()) {
            // Scores are aligned with the pooled system list; print them in rank order.
            for (const auto& id : r.order) {
              auto pos = std::find(pooled.systems.begin(), pooled.systems.end(), id) - pooled.systems.begin();
              score_text.push_back(fixed(r.scores[static_cast<std::size_t>(pos)], 6));
            }
          }
          const bool mfas = method == RankingMethod::kMfasCopeland || method == RankingMethod::kMfasExact;
          ranking_rows.push_back({judge.judge_id, crit, to_string(manifest.aggregation),
                                  to_string(method), join(r.order, '|'), join(score_text, '|'),
                                  opt_fixed(r.tau_vs_gold, 6),
                                  r.feedback_cost ? std::to_string(*r.feedback_cost) : "",
                                  mfas ? to_string(manifest.ranking.mfas_weights) : ""});
          cell.rankings.push_back(std::move(r));
        }
      }

      json cj = {{"judge_id", judge.judge_id},
                 {"criterion", crit},
                 {"excluded_docs", cell.excluded_docs}};
      if (cell.stats) {
        cj["documents"] = cell.stats->per_doc.size();
        cj["mean_rho"] = cell.stats->aggregate_mean.to_string();
        cj["frac_docs_with_violation"] = cell.stats->frac_docs_with_violation.to_string();
        cj["max_rho"] = cell.stats->max_rho.to_string();
        cj["median_rho"] = cell.stats->median_rho.to_string();
      }
      cells_json.push_back(cj);
      report.cells.push_back(std::move(cell));
    }
  }

  const fs::path& out = manifest.output_dir;
  write_csv(out / files::kViolationsPerDoc, digest, per_doc_rows);
  write_csv(out / files::kViolationDistribution, digest, dist_rows);
  write_csv(out / files::kViolationsSummary, digest, summary_rows);
  write_csv(out / files::kRankings, digest, ranking_rows);
  write_csv(out / files::kTransitivityWarnings, digest, warning_rows);
  write_json(out / files::kTransitivitySummary,
             {{"manifest_digest", digest},
              {"aggregation", to_string(manifest.aggregation)},
              {"verdict_records", records.size()},
              {"warnings", warning_rows.size() - 1},
              {"cells", cells_json}});
  return report;
}

ConformalReport cmd_analyze_conformal(RunManifest& manifest, std::ostream& log) {
  Corpus corpus = load_working_corpus(manifest);
  const std::string digest = manifest.digest();
  const auto records = read_score_store(manifest.output_dir / files::kScores);

  using Key = std::pair<std::string, Criterion>;
  std::map<Key, std::vector<LikertRecord>> grouped;
  ConformalReport report;
  std::map<Key, std::size_t> excluded;
  for (const auto& r : records) {
    if (r.status == RecordStatus::kOk && r.judge_score && r.gold) {
      grouped[{r.judge_id, r.criterion}].push_back(
          {r.doc_id, r.system_id, r.criterion, r.judge_id, *r.judge_score, *r.gold});
    } else {
      ++report.excluded_records;
      ++excluded[{r.judge_id, r.criterion}];
    }
  }

  std::vector<std::vector<std::string>> cell_rows = {
      {"judge_id", "criterion", "alpha", "target_coverage", "records", "coverage", "avg_set_size",
       "r_s", "p", "r_s_defined", "split_count", "seed"}};
  std::vector<std::vector<std::string>> curve_rows = {
      {"alpha", "judge_id", "criterion", "width", "mae", "ci95", "count", "degenerate"}};
  std::vector<std::vector<std::string>> corr_rows = {
      {"alpha", "judge_id", "criterion", "n", "r_s", "p", "defined"}};
  std::vector<std::vector<std::string>> agreement_rows = {
      {"alpha", "criterion", "granularity", "judge_a", "judge_b", "n", "r", "p", "defined"}};
  std::vector<std::vector<std::string>> warning_rows = {{"judge_id", "criterion", "kind", "detail"}};
  auto warn = [&](const std::string& judge, Criterion c, const std::string& kind,
                  const std::string& detail) {
    warning_rows.push_back({judge, std::string(to_string(c)), kind, detail});
    log << "warning: " << cell_label(judge, c) << ": " << kind << " (" << detail << ")\n";
  };
  auto corr_row = [&](const Rational& alpha, const std::string& judge, const std::string& crit,
                      const stats::Correlation& r) {
    corr_rows.push_back({alpha.to_decimal(), judge, crit, std::to_string(r.n),
                         r.defined ? fixed(r.r, 6) : "", r.defined ? sci(r.p) : "",
                         r.defined ? "true" : "false"});
  };

  for (const auto& [key, count] : excluded) {
    warn(key.first, key.second, "excluded_records", std::to_string(count) + " records without a usable score or gold label");
  }

  const conformal::SplitOptions split{manifest.split_count, manifest.split_fraction, manifest.seed};
  std::map<std::pair<Rational, Criterion>, std::vector<std::size_t>> cells_by_alpha;
  for (const auto& judge : manifest.judges) {
    for (Criterion c : manifest.criteria) {
      const auto it = grouped.find({judge.judge_id, c});
      const std::vector<LikertRecord> empty;
      const auto& recs = it == grouped.end() ? empty : it->second;
      if (recs.size() < conformal::kMinSplitRecords) {
        warn(judge.judge_id, c, "cell_skipped", std::to_string(recs.size()) + " usable records");
        continue;
      }
      for (const Rational& alpha : manifest.alphas) {
        ConformalCell cell{judge.judge_id, c, alpha, recs.size(),
                           conformal::run_split_evaluation(recs, alpha, split)};
        cells_by_alpha[{alpha, c}].push_back(report.cells.size());
        report.cells.push_back(std::move(cell));
      }
    }
  }

  for (const auto& cell : report.cells) {
    const auto& e = cell.evaluation;
    const std::string crit(to_string(cell.criterion));
    cell_rows.push_back({cell.judge_id, crit, cell.alpha.to_decimal(),
                         (Rational(1) - cell.alpha).to_decimal(), std::to_string(cell.records),
                         fixed(e.coverage, 6), fixed(e.avg_set_size, 6),
                         e.width_error.defined ? fixed(e.width_error.r, 6) : "",
                         e.width_error.defined ? sci(e.width_error.p) : "",
                         e.width_error.defined ? "true" : "false", std::to_string(e.split_count),
                         std::to_string(e.seed)});
    for (const auto& bin : e.curve) {
      curve_rows.push_back({cell.alpha.to_decimal(), cell.judge_id, crit, std::to_string(bin.width),
                            fixed(bin.mae, 6), fixed(bin.ci95, 6), std::to_string(bin.count),
                            bin.degenerate ? "true" : "false"});
    }
    corr_row(cell.alpha, cell.judge_id, crit, e.width_error);
  }

  // Pooled over judges, per criterion and overall.
  for (const Rational& alpha : manifest.alphas) {
    std::vector<conformal::WidthError> everything;
    for (Criterion c : manifest.criteria) {
      auto found = cells_by_alpha.find({alpha, c});
      if (found == cells_by_alpha.end()) continue;
      std::vector<conformal::WidthError> pooled;
      for (std::size_t idx : found->second) {
        const auto& p = report.cells[idx].evaluation.pooled;
        pooled.insert(pooled.end(), p.begin(), p.end());
      }
      everything.insert(everything.end(), pooled.begin(), pooled.end());
      const std::string crit(to_string(c));
      for (const auto& bin : conformal::reliability_curve(pooled)) {
        curve_rows.push_back({alpha.to_decimal(), "*", crit, std::to_string(bin.width),
                              fixed(bin.mae, 6), fixed(bin.ci95, 6), std::to_string(bin.count),
                              bin.degenerate ? "true" : "false"});
      }
      corr_row(alpha, "*", crit, conformal::width_error_correlation(pooled));
    }
    if (!everything.empty()) corr_row(alpha, "*", "*", conformal::width_error_correlation(everything));
  }

  // Coverage against alpha, across judges.
  std::vector<std::vector<std::string>> coverage_rows = {
      {"criterion", "alpha", "target_coverage", "judges", "mean_coverage", "sd_coverage",
       "min_coverage", "mean_set_size"}};
  for (Criterion c : manifest.criteria) {
    for (const Rational& alpha : manifest.alphas) {
      auto found = cells_by_alpha.find({alpha, c});
      if (found == cells_by_alpha.end()) continue;
      std::vector<double> cov;
      double size_sum = 0.0;
      for (std::size_t idx : found->second) {
        cov.push_back(report.cells[idx].evaluation.coverage);
        size_sum += report.cells[idx].evaluation.avg_set_size;
      }
      double mean = 0.0;
      for (double v : cov) mean += v;
      mean /= static_cast<double>(cov.size());
      double var = 0.0;
      for (double v : cov) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(cov.size()));
      coverage_rows.push_back({std::string(to_string(c)), alpha.to_decimal(),
                               (Rational(1) - alpha).to_decimal(), std::to_string(cov.size()),
                               fixed(mean, 6), fixed(sd, 6),
                               fixed(*std::min_element(cov.begin(), cov.end()), 6),
                               fixed(size_sum / static_cast<double>(cov.size()), 6)});
    }
  }

  // Inter-judge width agreement on instances every judge was tested on.
  for (const auto& [ac, indices] : cells_by_alpha) {
    if (indices.size() < 2) continue;
    const auto& [alpha, c] = ac;
    std::vector<std::map<std::string, std::pair<double, int>>> per_judge;
    for (std::size_t idx : indices) {
      const auto& cell = report.cells[idx];
      const auto& recs = grouped.at({cell.judge_id, c});
      std::map<std::string, std::pair<double, int>> widths;
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& w = cell.evaluation.instance_width[i];
        if (!w) continue;
        const std::string key = manifest.width_granularity == WidthGranularity::kDocument
                                    ? recs[i].doc_id
                                    : recs[i].doc_id + "\x1f" + recs[i].system_id;
        auto& slot = widths[key];
        slot.first += *w;
        slot.second += 1;
      }
      per_judge.push_back(std::move(widths));
    }
    std::vector<std::string> shared;
    for (const auto& [key, value] : per_judge.front()) {
      bool everywhere = true;
      for (const auto& other : per_judge) everywhere = everywhere && other.count(key);
      if (everywhere) shared.push_back(key);
    }
    std::vector<conformal::JudgeWidths> judges;
    for (std::size_t j = 0; j < indices.size(); ++j) {
      conformal::JudgeWidths jw{report.cells[indices[j]].judge_id, shared, {}};
      for (const auto& key : shared) {
        const auto& [sum, count] = per_judge[j].at(key);
        jw.widths.push_back(sum / count);
      }
      judges.push_back(std::move(jw));
    }
    if (shared.size() < 3) {
      warn("*", c, "agreement_skipped",
           "alpha " + alpha.to_decimal() + ": " + std::to_string(shared.size()) + " shared instances");
      continue;
    }
    AgreementCell ag{alpha, c, conformal::inter_judge_width_agreement(judges)};
    for (std::size_t a = 0; a < ag.matrix.judges.size(); ++a) {
      for (std::size_t b = a + 1; b < ag.matrix.judges.size(); ++b) {
        const auto& r = ag.matrix.cells(a, b);
        agreement_rows.push_back({alpha.to_decimal(), std::string(to_string(c)),
                                  to_string(manifest.width_granularity), ag.matrix.judges[a],
                                  ag.matrix.judges[b], std::to_string(r.n),
                                  r.defined ? fixed(r.r, 6) : "", r.defined ? sci(r.p) : "",
                                  r.defined ? "true" : "false"});
      }
    }
    report.agreement.push_back(std::move(ag));
  }

  json cells_json = json::array();
  for (const auto& cell : report.cells) {
    cells_json.push_back({{"judge_id", cell.judge_id},
                          {"criterion", std::string(to_string(cell.criterion))},
                          {"alpha", cell.alpha.to_decimal()},
                          {"records", cell.records},
                          {"coverage", cell.evaluation.coverage},
                          {"avg_set_size", cell.evaluation.avg_set_size},
                          {"meets_target", cell.evaluation.coverage + 1e-12 >=
                                               (Rational(1) - cell.alpha).to_double()}});
  }
  const fs::path& out = manifest.output_dir;
  write_csv(out / files::kConformalCells, digest, cell_rows);
  write_csv(out / files::kCoverageVsAlpha, digest, coverage_rows);
  write_csv(out / files::kWidthAgreement, digest, agreement_rows);
  write_csv(out / files::kReliabilityCurve, digest, curve_rows);
  write_csv(out / files::kWidthErrorCorrelation, digest, corr_rows);
  write_csv(out / files::kConformalWarnings, digest, warning_rows);
  write_json(out / files::kConformalSummary,
             {{"manifest_digest", digest},
              {"score_records", records.size()},
              {"excluded_records", report.excluded_records},
              {"split_count", manifest.split_count},
              {"split_fraction", manifest.split_fraction},
              {"seed", manifest.seed},
              {"warnings", warning_rows.size() - 1},
              {"cells", cells_json}});
  return report;
}

int cmd_report(RunManifest& manifest, std::ostream& log) {
  Corpus corpus = load_working_corpus(manifest);
  const fs::path& out = manifest.output_dir;
  const auto budget = protocol_budget(corpus, static_cast<int>(manifest.criteria.size()),
                                      static_cast<int>(manifest.judges.size()), manifest.k);
  json report = {{"manifest_digest", manifest.digest()},
                 {"toolkit_version", manifest.toolkit_version},
                 {"budget", {{"pairwise_calls", budget.pairwise_calls},
                             {"scoring_calls", budget.scoring_calls}}}};
  auto read_json = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return json::parse(in);
  };
  bool any = false;
  if (fs::exists(out / files::kVerdicts)) {
    cmd_analyze_transitivity(manifest, log);
    report["transitivity"] = read_json(out / files::kTransitivitySummary);
    any = true;
  }
  if (fs::exists(out / files::kScores)) {
    cmd_analyze_conformal(manifest, log);
    report["conformal"] = read_json(out / files::kConformalSummary);
    any = true;
  }
  if (fs::exists(out / files::kPairwiseRun)) report["pairwise_run"] = read_json(out / files::kPairwiseRun);
  if (fs::exists(out / files::kScoringRun)) report["scoring_run"] = read_json(out / files::kScoringRun);
  if (!any) throw ValidationError("no verdict or score store in " + out.string());
  write_json(out / files::kReport, report);
  return kExitOk;
}

std::size_t cmd_cache_import(RunManifest& manifest, const fs::path& jsonl) {
  RunManifest live = manifest;
  live.mode = gateway::Mode::kLive;
  if (live.cache_path.extension() == ".jsonl") throw ValidationError("cannot import into a .jsonl cache");
  auto cache = open_cache(live);
  std::ifstream in(jsonl, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + jsonl.string());
  return cache->import_jsonl(in);
}

std::size_t cmd_cache_export(RunManifest& manifest, const fs::path& jsonl) {
  auto cache = open_cache(manifest);
  std::ostringstream out;
  cache->export_jsonl(out);
  write_file_atomically(jsonl, out.str());
  return cache->size();
}

}  // namespace judge_audit
