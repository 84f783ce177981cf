// Writes the bundled replay fixture: a 30 x 8 corpus, its manifest and a
// response cache in which
//   - mistral's coherence tournaments carry 69 cyclic triples over 15 of the
//     30 documents, the worst document having 17;
//   - gpt's relevance scores give size 3.17 and coverage 0.928 at alpha 0.10
//     under the manifest's splits.
// Usage: make_fixtures <output-dir>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "judge_audit/commands.hpp"

using namespace judge_audit;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSystems = {"0", "2", "4", "6", "9", "11", "13", "15"};
constexpr int kDocs = 30;
constexpr std::uint64_t kSeed = 2024;
constexpr int kSplits = 20;

const std::vector<std::int64_t> kMistralCycles = {17, 8, 6, 5, 5, 4, 4, 4, 3, 3, 3, 2, 2, 2, 1};

std::string thirds(int gold, int offset) {
  // A three-annotator mean that rounds to gold.
  if (offset < 0 && gold > 1) return fmt::format("{}.667", gold - 1);
  if (offset > 0 && gold < 5) return fmt::format("{}.333", gold);
  return std::to_string(gold);
}

// Hill-climbs on edge flips until the tournament has exactly `target` cycles.
SquareMatrix<char> tournament_with_cycles(std::int64_t target, std::mt19937_64& rng) {
  const std::size_t n = kSystems.size();
  SquareMatrix<char> e(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e(i, j) = 1;
  auto cycles = [&] { return count_directed_3cycles(tournament_from_edges(kSystems, e)); };
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::int64_t current = cycles();
  while (current != target) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    std::swap(e(i, j), e(j, i));
    const std::int64_t next = cycles();
    if (std::abs(next - target) <= std::abs(current - target) || std::bernoulli_distribution(0.1)(rng)) {
      current = next;
    } else {
      std::swap(e(i, j), e(j, i));
    }
  }
  return e;
}

struct Instance {
  int relevance_gold = 3;
  int gpt_relevance = 3;
  int coherence_gold = 3;
};

// Judge scores and gold labels for gpt relevance, in corpus order.
std::vector<Instance> relevance_design(std::uint64_t search_seed, int mid, int wide) {
  std::mt19937_64 rng(search_seed);
  const std::size_t total = kDocs * kSystems.size();
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Instance> out(total);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> near(0, 2);
  for (std::size_t r = 0; r < total; ++r) {
    Instance& x = out[order[r]];
    if (r < static_cast<std::size_t>(mid)) {
      x.gpt_relevance = coin(rng) ? 2 : 4;
      x.relevance_gold = x.gpt_relevance + std::uniform_int_distribution<int>(-1, 1)(rng);
    } else {
      x.gpt_relevance = coin(rng) ? 1 : 5;
      const int residual = r < static_cast<std::size_t>(mid + wide) ? 3 + (coin(rng) & coin(rng)) : near(rng);
      x.relevance_gold = x.gpt_relevance == 1 ? 1 + residual : 5 - residual;
    }
    x.coherence_gold = 1 + static_cast<int>((order[r] * 7 + r) % 5);
  }
  return out;
}

conformal::SplitEvaluation evaluate(const std::vector<Instance>& design) {
  std::vector<LikertRecord> records;
  for (std::size_t i = 0; i < design.size(); ++i) {
    records.push_back({"d" + std::to_string(i / kSystems.size()), kSystems[i % kSystems.size()],
                       Criterion::kRelevance, "gpt", design[i].gpt_relevance, design[i].relevance_gold});
  }
  return conformal::run_split_evaluation(records, Rational(1, 10), {kSplits, 0.5, kSeed});
}

std::vector<Instance> search_relevance() {
  for (std::uint64_t s = 1;; ++s) {
    for (int mid = 38; mid <= 44; ++mid)
      for (int wide = 15; wide <= 19; ++wide) {
        auto design = relevance_design(s, mid, wide);
        auto e = evaluate(design);
        if (std::abs(e.avg_set_size - 3.17) < 0.003 && std::abs(e.coverage - 0.928) < 0.003) {
          std::cerr << fmt::format("relevance design: seed {} mid {} wide {} size {:.4f} coverage {:.4f}\n", s,
                                   mid, wide, e.avg_set_size, e.coverage);
          return design;
        }
      }
  }
}

void put(gateway::ResponseCache& cache, const gateway::JudgeConfig& judge, const std::string& prompt,
         int rep, const std::string& response) {
  gateway::JudgeRequest req{prompt, rep};
  cache.put({gateway::cache_key(judge, req), gateway::canonical_request_json(judge, req), response,
             "2025-03-01T00:00:00Z"});
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 2;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir);
  std::mt19937_64 rng(kSeed);

  const auto design = search_relevance();

  std::vector<std::string> doc_ids;
  {
    std::ofstream out(dir / "corpus.jsonl", std::ios::binary);
    std::uniform_int_distribution<int> offset(-1, 1);
    for (int d = 0; d < kDocs; ++d) {
      const std::string doc_id = std::to_string(1001 + d * 37);
      doc_ids.push_back(doc_id);
      for (std::size_t s = 0; s < kSystems.size(); ++s) {
        const Instance& x = design[d * kSystems.size() + s];
        nlohmann::json r = {
            {"doc_id", doc_id},
            {"document", fmt::format("Synthetic article {} about topic {}.", doc_id, d % 7)},
            {"system_id", kSystems[s]},
            {"output", fmt::format("Summary by system {} of article {}.", kSystems[s], doc_id)},
            {"human",
             {{"coherence", thirds(x.coherence_gold, offset(rng))},
              {"consistency", thirds(1 + static_cast<int>((s + d) % 5), offset(rng))},
              {"fluency", thirds(1 + static_cast<int>((s * 3 + d) % 5), offset(rng))},
              {"relevance", thirds(x.relevance_gold, offset(rng))}}}};
        out << r.dump() << "\n";
      }
    }
  }

  nlohmann::json manifest = {
      {"corpus", "corpus.jsonl"},
      {"criteria", {"coherence", "relevance"}},
      {"judges",
       {{{"judge_id", "mistral"}, {"model_name", "mistralai/mistral-small-3.1-24b-instruct"}, {"temperature", 0.7}},
        {{"judge_id", "gpt"}, {"model_name", "gpt-4o-mini"}, {"temperature", 0.7}}}},
      {"k", 3},
      {"split_count", kSplits},
      {"seed", kSeed},
      {"mode", "replay"},
      {"cache", "cache.jsonl"},
      {"output_dir", "out"}};
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
  }

  RunManifest m = load_manifest(dir / "manifest.json");
  Corpus corpus = load_working_corpus(m);
  const auto& mistral = m.judges[0];
  const auto& gpt = m.judges[1];

  // Mistral coherence: fixed cycle counts over a shuffled set of documents.
  std::vector<std::int64_t> cycles(kDocs, 0);
  std::copy(kMistralCycles.begin(), kMistralCycles.end(), cycles.begin());
  std::shuffle(cycles.begin(), cycles.end(), rng);
  std::map<std::string, SquareMatrix<char>> mistral_edges;
  for (int d = 0; d < kDocs; ++d) mistral_edges.emplace(doc_ids[d], tournament_with_cycles(cycles[d], rng));

  auto position = [](const std::string& id) {
    return static_cast<std::size_t>(std::find(kSystems.begin(), kSystems.end(), id) - kSystems.begin());
  };
  auto gold_prefers_a = [&](const PairwiseRequestSpec& r) {
    const auto* a = corpus.find(r.doc_id, r.system_a);
    const auto* b = corpus.find(r.doc_id, r.system_b);
    const Rational& ha = a->human_avg.at(r.criterion);
    const Rational& hb = b->human_avg.at(r.criterion);
    return ha == hb ? id_less(r.system_a, r.system_b) : hb < ha;
  };

  gateway::ResponseCache cache(":memory:");
  std::uniform_int_distribution<int> pattern(0, 5);
  for (const auto& r : pairwise_requests(corpus, m.criteria, m.k)) {
    if (r.repetition_index != 0) continue;
    bool mistral_a = gold_prefers_a(r);
    if (r.criterion == Criterion::kCoherence) {
      mistral_a = mistral_edges.at(r.doc_id)(position(r.system_a), position(r.system_b)) != 0;
    }
    const bool gpt_a = gold_prefers_a(r);
    for (const auto& [judge, wins_a] : {std::pair{&mistral, mistral_a}, std::pair{&gpt, gpt_a}}) {
      const std::string win = wins_a ? "A" : "B";
      const std::string lose = wins_a ? "B" : "A";
      // Two of three repetitions, at least, agree with the majority.
      const int p = pattern(rng);
      for (int rep = 0; rep < m.k; ++rep) {
        std::string reply = (p == rep) ? lose : win;
        if (p == 4 && rep == 2) reply = win + ".";
        put(cache, *judge, r.prompt, rep, reply);
      }
    }
  }

  std::uniform_int_distribution<int> jitter(-1, 1);
  for (const auto& r : scoring_requests(corpus, m.criteria)) {
    const auto* inst = corpus.find(r.doc_id, r.system_id);
    const int gold = gold_label(inst->human_avg.at(r.criterion));
    const std::size_t idx = (std::find(doc_ids.begin(), doc_ids.end(), r.doc_id) - doc_ids.begin()) *
                                kSystems.size() +
                            position(r.system_id);
    const int gpt_score = r.criterion == Criterion::kRelevance ? design[idx].gpt_relevance
                                                               : std::clamp(gold + jitter(rng), 1, 5);
    put(cache, gpt, r.prompt, 0, std::to_string(gpt_score));
    put(cache, mistral, r.prompt, 0, fmt::format("Score: {}", std::clamp(gold + jitter(rng), 1, 5)));
  }

  std::ofstream out(dir / "cache.jsonl", std::ios::binary);
  cache.export_jsonl(out);
  std::cerr << fmt::format("wrote {} cache entries to {}\n", cache.size(), dir.string());
  return 0;
}
