#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "judge_audit/domain.hpp"

namespace judge_audit {

struct Corpus {
  std::vector<EvalInstance> instances;
  std::vector<std::string> doc_order;
  std::vector<std::string> system_order;
  // SHA-256 of the source file bytes; empty for corpora built in memory.
  std::string content_digest;

  std::size_t doc_count() const { return doc_order.size(); }
  std::size_t system_count() const { return system_order.size(); }

  // Instances of one document, in system_order.
  std::vector<const EvalInstance*> instances_for(const std::string& doc_id) const;
  const EvalInstance* find(const std::string& doc_id, const std::string& system_id) const;
};

// Builds doc_order/system_order from first appearance and checks the
// corpus invariants. Throws ValidationError or DomainError.
Corpus make_corpus(std::vector<EvalInstance> instances);

// Line-delimited JSON; see README for the record layout.
Corpus load_corpus(const std::string& path);
Corpus parse_corpus(std::istream& in);
void write_corpus(std::ostream& out, const Corpus& corpus);

enum class DocSelection { kFileOrder, kIdOrder };

DocSelection parse_doc_selection(const std::string& name);
std::string to_string(DocSelection s);

// Keeps the first doc_count documents (in file order or id order) and the
// listed systems, in the listed order.
Corpus subsample(const Corpus& corpus, std::size_t doc_count,
                 const std::vector<std::string>& system_ids,
                 DocSelection selection = DocSelection::kFileOrder);

struct ProtocolBudget {
  std::uint64_t pairwise_calls = 0;
  std::uint64_t scoring_calls = 0;
};

ProtocolBudget protocol_budget(const Corpus& corpus, int criteria, int judges, int k);

}  // namespace judge_audit
