// judge-audit: command-line front end of the toolkit.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "judge_audit/commands.hpp"
#include "judge_audit/errors.hpp"

namespace ja = judge_audit;

namespace {

struct CommonOptions {
  std::string manifest;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> corpus;
  std::optional<std::size_t> docs;
  std::vector<std::string> systems;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--manifest", o.manifest, "Run manifest (JSON)")->required();
  cmd->add_option("--mode", o.mode, "live or replay");
  cmd->add_option("--seed", o.seed, "Split seed override");
  cmd->add_option("--out", o.out, "Output directory override");
  cmd->add_option("--corpus", o.corpus, "Corpus path override");
  cmd->add_option("--docs", o.docs, "Number of documents (0 = all)");
  cmd->add_option("--systems", o.systems, "System ids to keep, in order")->delimiter(',');
}

ja::RunManifest resolve(const CommonOptions& o) {
  ja::RunManifest m = ja::load_manifest(o.manifest);
  if (o.mode) m.mode = ja::gateway::parse_mode(*o.mode);
  if (o.seed) m.seed = *o.seed;
  if (o.out) m.output_dir = *o.out;
  if (o.corpus) m.corpus_path = *o.corpus;
  if (o.docs) m.docs = *o.docs;
  if (!o.systems.empty()) m.systems = o.systems;
  return m;
}

int report_missing(const ja::MissingCacheError& e) {
  std::cerr << "error: " << e.digests().size() << " requests missing from the cache\n";
  for (const auto& d : e.digests()) std::cerr << "  " << d << '\n';
  return ja::kExitMissingCache;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reliability audit of LLM judges: transitivity and conformal width."};
  app.set_version_flag("--version", std::string(JUDGE_AUDIT_VERSION));
  app.require_subcommand(1);

  CommonOptions common;
  std::string jsonl;
  auto* ingest = app.add_subcommand("ingest", "Validate the corpus and record the manifest");
  auto* pairwise = app.add_subcommand("run-pairwise", "Collect pairwise verdicts");
  auto* scoring = app.add_subcommand("run-scoring", "Collect direct Likert scores");
  auto* transitivity = app.add_subcommand("analyze-transitivity", "Violation rates and rankings");
  auto* conformal = app.add_subcommand("analyze-conformal", "Split conformal evaluation");
  auto* report = app.add_subcommand("report", "Run available analyses and write report.json");
  auto* import = app.add_subcommand("cache-import", "Load a line-delimited export into the cache");
  auto* exporter = app.add_subcommand("cache-export", "Write the cache as line-delimited JSON");
  for (auto* cmd : {ingest, pairwise, scoring, transitivity, conformal, report, import, exporter}) {
    add_common(cmd, common);
  }
  import->add_option("file", jsonl, "Export to read")->required();
  exporter->add_option("file", jsonl, "Export to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; usage errors count as validation.
    const int code = app.exit(e);
    return code == 0 ? 0 : ja::kExitValidation;
  }

  try {
    ja::RunManifest m = resolve(common);
    if (ingest->parsed()) return ja::cmd_ingest(m, std::cerr);
    if (pairwise->parsed()) return ja::cmd_run_pairwise(m, nullptr, std::cerr).exit_code;
    if (scoring->parsed()) return ja::cmd_run_scoring(m, nullptr, std::cerr).exit_code;
    if (transitivity->parsed()) {
      ja::cmd_analyze_transitivity(m, std::cerr);
      return ja::kExitOk;
    }
    if (conformal->parsed()) {
      ja::cmd_analyze_conformal(m, std::cerr);
      return ja::kExitOk;
    }
    if (report->parsed()) return ja::cmd_report(m, std::cerr);
    if (import->parsed()) {
      std::cerr << ja::cmd_cache_import(m, jsonl) << " entries imported\n";
      return ja::kExitOk;
    }
    if (exporter->parsed()) {
      std::cerr << ja::cmd_cache_export(m, jsonl) << " entries exported\n";
      return ja::kExitOk;
    }
  } catch (const ja::MissingCacheError& e) {
    return report_missing(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ja::exit_code_for(e);
  }
  return ja::kExitFailure;
}
