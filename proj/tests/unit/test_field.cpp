#include <doctest.h>

#include <random>

#include "treehom/errors.hpp"
#include "treehom/rational.hpp"

using namespace treehom;

namespace {

Rational random_rational(std::mt19937& rng) {
  std::uniform_int_distribution<int> num(-40, 40);
  std::uniform_int_distribution<int> den(1, 12);
  return Rational(num(rng), den(rng));
}

}  // namespace

TEST_CASE("rational arithmetic on pinned values") {
  CHECK(Rational(2) + Rational(-2) == 0);
  CHECK(Rational(1) * Rational(7, 3) == Rational(7, 3));
  CHECK(rational_inverse(Rational(2, 3)) == Rational(3, 2));
  CHECK_THROWS_AS(rational_inverse(Rational(0)), DivisionByZeroError);
}

TEST_CASE("rational parsing and printing") {
  CHECK(parse_rational("-2") == Rational(-2));
  CHECK(parse_rational("3/2") == Rational(3, 2));
  CHECK(parse_rational("4/6") == Rational(2, 3));
  CHECK(rational_str(Rational(-7, 2)) == "-7/2");
  CHECK(rational_str(Rational(5)) == "5");
  CHECK(rational_str(parse_rational("0/9")) == "0");
  CHECK_THROWS_AS(parse_rational("1/0"), ParseError);
  CHECK_THROWS_AS(parse_rational("x"), ParseError);
  CHECK_THROWS_AS(parse_rational("1.5"), ParseError);
}

TEST_CASE("normal form invariants") {
  Rational r(6, -4);
  CHECK(numerator(r) == -3);
  CHECK(denominator(r) == 2);
  CHECK(Rational(0, 5) == Rational(0, 1));
}

TEST_CASE("field laws on random values") {
  std::mt19937 rng(20240811);
  for (int i = 0; i < 300; ++i) {
    Rational a = random_rational(rng);
    Rational b = random_rational(rng);
    Rational c = random_rational(rng);
    CHECK(a + b == b + a);
    CHECK(a * b == b * a);
    CHECK((a + b) + c == a + (b + c));
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(a + (-a) == 0);
    if (a != 0) CHECK(a * rational_inverse(a) == 1);
  }
}
