#include <doctest.h>

#include "judge_audit/domain.hpp"
#include "judge_audit/errors.hpp"
#include "judge_audit/rational.hpp"

using namespace judge_audit;

TEST_CASE("rational parse and normalise") {
  CHECK(Rational::parse("4.333") == Rational(4333, 1000));
  CHECK(Rational::parse("13/3") == Rational(13, 3));
  CHECK(Rational::parse("-0.5") == Rational(-1, 2));
  CHECK(Rational::parse(" 5 ") == Rational(5));
  CHECK(Rational(6, -4) == Rational(-3, 2));
  CHECK(Rational(6, -4).den() == 2);
  CHECK_THROWS_AS(Rational::parse(""), ParseError);
  CHECK_THROWS_AS(Rational::parse("1.2.3"), ParseError);
  CHECK_THROWS_AS(Rational::parse("1/0"), ParseError);
  CHECK_THROWS_AS(Rational::parse("abc"), ParseError);
  CHECK_THROWS_AS(Rational(1, 0), DomainError);
}

TEST_CASE("rational arithmetic and rendering") {
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK(Rational(1, 3) - Rational(1, 2) == Rational(-1, 6));
  CHECK(Rational(2, 3) * Rational(3, 4) == Rational(1, 2));
  CHECK(Rational(1, 56) / Rational(1, 2) == Rational(1, 28));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(Rational(7, 2).floor() == 3);
  CHECK(Rational(7, 2).ceil() == 4);
  CHECK(Rational(-7, 2).floor() == -4);
  CHECK(Rational(-7, 2).ceil() == -3);
  CHECK(Rational(1, 20).to_decimal() == "0.05");
  CHECK(Rational(13, 3).to_decimal() == "13/3");
  CHECK(Rational(4333, 1000).to_decimal() == "4.333");
  CHECK(Rational(-1, 8).to_decimal() == "-0.125");
  CHECK(Rational(4).to_decimal() == "4");
  CHECK(Rational(1, 56).to_string() == "1/56");
}

TEST_CASE("gold label rounds to nearest with half up") {
  CHECK(gold_label(Rational(13, 3)) == 4);
  CHECK(gold_label(Rational::parse("3.5")) == 4);
  CHECK(gold_label(Rational(1)) == 1);
  CHECK(gold_label(Rational::parse("4.333")) == 4);
  CHECK(gold_label(Rational(5, 3)) == 2);
  CHECK_THROWS_AS(gold_label(Rational::parse("5.7")), DomainError);
  CHECK_THROWS_AS(gold_label(Rational::parse("0.9")), DomainError);
}

TEST_CASE("gold label properties over thirds, quarters and tenths") {
  int previous = 1;
  for (int den : {3, 4, 10}) {
    previous = 1;
    for (int num = den; num <= 5 * den; ++num) {
      Rational v(num, den);
      const int g = gold_label(v);
      CHECK(g >= previous);
      previous = g;
      const Rational diff = v - Rational(g);
      CHECK(diff <= Rational(1, 2));
      CHECK(diff >= Rational(-1, 2));
    }
  }
  for (int n = 1; n <= 5; ++n) CHECK(gold_label(Rational(n)) == n);
}

TEST_CASE("criterion names round trip") {
  for (Criterion c : kAllCriteria) CHECK(parse_criterion(to_string(c)) == c);
  CHECK(to_string(Criterion::kRelevance) == "relevance");
  CHECK_THROWS_AS(parse_criterion("Coherence"), ValidationError);
}

TEST_CASE("id ordering is numeric for digit ids") {
  CHECK(id_less("2", "11"));
  CHECK_FALSE(id_less("11", "2"));
  CHECK(id_less("09", "10"));
  CHECK(id_less("a10", "a2"));
  CHECK(id_less("2", "a"));
  CHECK_FALSE(id_less("x", "x"));
}

TEST_CASE("likert validation") {
  CHECK_NOTHROW(validate_likert(1));
  CHECK_NOTHROW(validate_likert(5));
  CHECK_THROWS_AS(validate_likert(0), DomainError);
  CHECK_THROWS_AS(validate_likert(6), DomainError);
}
