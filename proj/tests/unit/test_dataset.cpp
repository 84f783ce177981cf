#include <doctest.h>

#include <sstream>

#include "judge_audit/dataset.hpp"
#include "judge_audit/errors.hpp"

using namespace judge_audit;

namespace {

std::string line(const std::string& doc, const std::string& sys, const std::string& coherence = "3") {
  return R"({"doc_id":")" + doc + R"(","document":"text of )" + doc + R"(","system_id":")" + sys +
         R"(","output":"summary )" + sys + R"(","human":{"coherence":")" + coherence +
         R"(","consistency":"4","fluency":"4.333","relevance":"2.667"}})" + "\n";
}

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

Corpus grid(int docs, int systems) {
  std::string text;
  for (int d = 0; d < docs; ++d)
    for (int s = 0; s < systems; ++s) text += line("doc-" + std::to_string(d), std::to_string(s));
  return parse(text);
}

}  // namespace

TEST_CASE("two by two corpus loads") {
  Corpus c = parse(line("doc-1", "0") + line("doc-1", "1") + line("doc-2", "0") + line("doc-2", "1"));
  CHECK(c.instances.size() == 4);
  CHECK(c.doc_order == std::vector<std::string>{"doc-1", "doc-2"});
  CHECK(c.system_order == std::vector<std::string>{"0", "1"});
  CHECK(c.find("doc-2", "1")->human_avg.at(Criterion::kFluency) == Rational(4333, 1000));
  CHECK(c.instances_for("doc-1").size() == 2);
}

TEST_CASE("corpus validation errors") {
  CHECK_THROWS_AS(parse(line("doc-1", "0") + line("doc-1", "0")), ValidationError);
  CHECK_THROWS_AS(parse(line("doc-1", "0", "5.7")), DomainError);
  CHECK_THROWS_AS(parse(line("doc-1", "0", "0.5")), DomainError);
  CHECK_THROWS_AS(parse(line("", "0")), ValidationError);
  // The second document lists systems against the corpus order.
  CHECK_THROWS_AS(parse(line("d1", "0") + line("d1", "1") + line("d2", "1") + line("d2", "0")),
                  ValidationError);
}

TEST_CASE("parse errors name the line") {
  const std::string bad = line("doc-1", "0") + "{not json}\n";
  try {
    parse(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse(R"({"doc_id":"d","document":"x","system_id":"s","output":"o","extra":1})" "\n"),
                  ParseError);
  CHECK_THROWS_AS(parse(R"({"doc_id":"d","document":"x","system_id":"s","output":"o","human":{"coherence":4}})" "\n"),
                  ParseError);
  CHECK_THROWS_AS(parse(R"({"doc_id":"d","document":"x","system_id":"s"})" "\n"), ParseError);
  CHECK_THROWS_AS(parse(R"({"doc_id":"d","document":"x","system_id":"s","output":"o","human":{"clarity":"4"}})" "\n"),
                  ParseError);
}

TEST_CASE("missing human block is allowed") {
  Corpus c = parse(R"({"doc_id":"d","document":"x","system_id":"s","output":"o"})" "\n");
  CHECK(c.instances.front().human_avg.empty());
}

TEST_CASE("write then parse round trips") {
  Corpus c = grid(3, 4);
  std::ostringstream out;
  write_corpus(out, c);
  Corpus back = parse(out.str());
  REQUIRE(back.instances.size() == c.instances.size());
  for (std::size_t i = 0; i < c.instances.size(); ++i) {
    CHECK(back.instances[i].doc_id == c.instances[i].doc_id);
    CHECK(back.instances[i].human_avg == c.instances[i].human_avg);
  }
}

TEST_CASE("subsample keeps the working set") {
  Corpus full = grid(100, 16);
  const std::vector<std::string> working = {"0", "2", "4", "6", "9", "11", "13", "15"};
  Corpus sub = subsample(full, 30, working);
  CHECK(sub.instances.size() == 240);
  CHECK(sub.system_order == working);
  CHECK(sub.doc_order.front() == "doc-0");
  CHECK(sub.doc_order.back() == "doc-29");

  Corpus again = subsample(sub, 30, working);
  CHECK(again.instances.size() == sub.instances.size());
  CHECK(again.doc_order == sub.doc_order);
  CHECK(again.system_order == sub.system_order);

  Corpus same = subsample(full, 100, full.system_order);
  CHECK(same.instances.size() == full.instances.size());

  CHECK_THROWS_AS(subsample(full, 30, {"0", "99"}), ValidationError);
  CHECK_THROWS_AS(subsample(full, 101, working), ValidationError);
  CHECK_THROWS_AS(subsample(full, 3, {"0", "0"}), ValidationError);
}

TEST_CASE("id-order selection sorts numerically") {
  std::string text;
  for (const char* d : {"10", "2", "1"}) text += line(d, "0");
  Corpus c = parse(text);
  CHECK(subsample(c, 2, {"0"}, DocSelection::kIdOrder).doc_order == std::vector<std::string>{"1", "2"});
  CHECK(subsample(c, 2, {"0"}, DocSelection::kFileOrder).doc_order == std::vector<std::string>{"10", "2"});
  CHECK(parse_doc_selection(to_string(DocSelection::kIdOrder)) == DocSelection::kIdOrder);
  CHECK_THROWS_AS(parse_doc_selection("random"), ValidationError);
}

TEST_CASE("protocol budget") {
  Corpus working = grid(30, 8);
  auto b = protocol_budget(working, 4, 4, 3);
  CHECK(b.pairwise_calls == 40320);
  CHECK(b.scoring_calls == 3840);
  auto tiny = protocol_budget(grid(1, 2), 1, 1, 1);
  CHECK(tiny.pairwise_calls == 1);
  CHECK(tiny.scoring_calls == 2);
  CHECK_THROWS_AS(protocol_budget(Corpus{}, 1, 1, 1), DomainError);
}
