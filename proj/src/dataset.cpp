#include "judge_audit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "judge_audit/errors.hpp"
#include "judge_audit/sha256.hpp"

namespace judge_audit {
namespace {

using json = nlohmann::json;

const std::set<std::string> kRecordFields = {"doc_id", "document", "system_id", "output", "human"};

std::string require_string(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string()) {
    throw ParseError("line " + std::to_string(line) + ": field '" + field +
                     "' missing or not a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::vector<const EvalInstance*> Corpus::instances_for(const std::string& doc_id) const {
  std::vector<const EvalInstance*> out;
  for (const auto& system : system_order) {
    if (const EvalInstance* inst = find(doc_id, system)) out.push_back(inst);
  }
  return out;
}

const EvalInstance* Corpus::find(const std::string& doc_id, const std::string& system_id) const {
  for (const auto& inst : instances) {
    if (inst.doc_id == doc_id && inst.system_id == system_id) return &inst;
  }
  return nullptr;
}

Corpus make_corpus(std::vector<EvalInstance> instances) {
  Corpus corpus;
  std::set<std::pair<std::string, std::string>> seen;
  std::unordered_map<std::string, std::size_t> system_rank;
  std::map<std::string, std::size_t> last_rank_in_doc;
  for (const auto& inst : instances) {
    if (inst.doc_id.empty()) throw ValidationError("empty doc_id");
    if (inst.system_id.empty()) throw ValidationError("empty system_id in doc " + inst.doc_id);
    if (!seen.emplace(inst.doc_id, inst.system_id).second) {
      throw ValidationError("duplicate instance (" + inst.doc_id + ", " + inst.system_id + ")");
    }
    for (const auto& [criterion, avg] : inst.human_avg) {
      if (avg < Rational(kMinLikert) || avg > Rational(kMaxLikert)) {
        throw DomainError("human " + std::string(to_string(criterion)) + " average " +
                          avg.to_string() + " outside [1, 5] for (" + inst.doc_id + ", " +
                          inst.system_id + ")");
      }
    }
    if (std::find(corpus.doc_order.begin(), corpus.doc_order.end(), inst.doc_id) ==
        corpus.doc_order.end()) {
      corpus.doc_order.push_back(inst.doc_id);
    }
    auto [it, inserted] = system_rank.emplace(inst.system_id, corpus.system_order.size());
    if (inserted) corpus.system_order.push_back(inst.system_id);
    auto last = last_rank_in_doc.find(inst.doc_id);
    if (last != last_rank_in_doc.end() && last->second > it->second) {
      throw ValidationError("document " + inst.doc_id + " lists system " + inst.system_id +
                            " out of the corpus-wide system order");
    }
    last_rank_in_doc[inst.doc_id] = it->second;
  }
  corpus.instances = std::move(instances);
  return corpus;
}

Corpus parse_corpus(std::istream& in) {
  std::vector<EvalInstance> instances;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    if (!record.is_object()) throw ParseError("line " + std::to_string(line_no) + ": not an object");
    for (const auto& [key, value] : record.items()) {
      if (!kRecordFields.count(key)) {
        throw ParseError("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
      }
    }
    EvalInstance inst;
    inst.doc_id = require_string(record, "doc_id", line_no);
    inst.document = require_string(record, "document", line_no);
    inst.system_id = require_string(record, "system_id", line_no);
    inst.output = require_string(record, "output", line_no);
    if (auto human = record.find("human"); human != record.end() && !human->is_null()) {
      if (!human->is_object()) throw ParseError("line " + std::to_string(line_no) + ": 'human' must be an object");
      for (const auto& [key, value] : human->items()) {
        Criterion c;
        try {
          c = parse_criterion(key);
        } catch (const ValidationError&) {
          throw ParseError("line " + std::to_string(line_no) + ": unknown criterion '" + key + "'");
        }
        if (!value.is_string()) {
          throw ParseError("line " + std::to_string(line_no) + ": human." + key + " must be a decimal string");
        }
        try {
          inst.human_avg[c] = Rational::parse(value.get<std::string>());
        } catch (const ParseError& e) {
          throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
      }
    }
    instances.push_back(std::move(inst));
  }
  return make_corpus(std::move(instances));
}

Corpus load_corpus(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ValidationError("cannot open corpus " + path);
  std::ostringstream buf;
  buf << file.rdbuf();
  std::string bytes = buf.str();
  std::istringstream in(bytes);
  Corpus corpus = parse_corpus(in);
  corpus.content_digest = sha256_hex(bytes);
  return corpus;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& inst : corpus.instances) {
    json record = json::object();
    record["doc_id"] = inst.doc_id;
    record["document"] = inst.document;
    record["system_id"] = inst.system_id;
    record["output"] = inst.output;
    if (!inst.human_avg.empty()) {
      json human = json::object();
      for (const auto& [c, avg] : inst.human_avg) human[std::string(to_string(c))] = avg.to_decimal();
      record["human"] = human;
    }
    out << record.dump() << '\n';
  }
}

DocSelection parse_doc_selection(const std::string& name) {
  if (name == "file-order") return DocSelection::kFileOrder;
  if (name == "id-order") return DocSelection::kIdOrder;
  throw ValidationError("unknown document selection '" + name + "' (expected file-order or id-order)");
}

std::string to_string(DocSelection s) {
  return s == DocSelection::kFileOrder ? "file-order" : "id-order";
}

Corpus subsample(const Corpus& corpus, std::size_t doc_count,
                 const std::vector<std::string>& system_ids, DocSelection selection) {
  if (doc_count > corpus.doc_count()) {
    throw ValidationError("requested " + std::to_string(doc_count) + " documents but corpus has " +
                          std::to_string(corpus.doc_count()));
  }
  std::set<std::string> distinct;
  for (const auto& id : system_ids) {
    if (std::find(corpus.system_order.begin(), corpus.system_order.end(), id) ==
        corpus.system_order.end()) {
      throw ValidationError("unknown system_id '" + id + "'");
    }
    if (!distinct.insert(id).second) throw ValidationError("system_id '" + id + "' listed twice");
  }

  std::vector<std::string> docs = corpus.doc_order;
  if (selection == DocSelection::kIdOrder) std::sort(docs.begin(), docs.end(), IdLess{});
  docs.resize(doc_count);

  std::vector<EvalInstance> kept;
  for (const auto& doc : docs) {
    for (const auto& system : system_ids) {
      if (const EvalInstance* inst = corpus.find(doc, system)) kept.push_back(*inst);
    }
  }
  Corpus out = make_corpus(std::move(kept));
  // Documents or systems left without instances still belong to the working set.
  out.doc_order = docs;
  out.system_order = system_ids;
  out.content_digest = corpus.content_digest;
  return out;
}

ProtocolBudget protocol_budget(const Corpus& corpus, int criteria, int judges, int k) {
  if (corpus.instances.empty()) throw DomainError("protocol budget of an empty corpus");
  if (criteria < 0 || judges < 0 || k < 0) throw DomainError("negative protocol dimension");
  const std::uint64_t docs = corpus.doc_count();
  const std::uint64_t systems = corpus.system_count();
  const std::uint64_t pairs = systems * (systems - 1) / 2;
  ProtocolBudget budget;
  budget.pairwise_calls = docs * pairs * static_cast<std::uint64_t>(k) * criteria * judges;
  budget.scoring_calls = docs * systems * static_cast<std::uint64_t>(criteria) * judges;
  return budget;
}

}  // namespace judge_audit
