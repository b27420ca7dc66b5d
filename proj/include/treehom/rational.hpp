#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

namespace treehom {

// Exact rational weight domain. Values are always normalized (lowest terms,
// positive denominator); 0 is 0/1 and 1 is 1/1.
using Rational = boost::multiprecision::cpp_rational;

// Accepts "p/q" or an integer literal, with optional leading '-'.
Rational parse_rational(const std::string& text);

// "p/q", or just "p" when the denominator is 1.
std::string rational_str(const Rational& r);

// Multiplicative inverse; throws DivisionByZeroError on 0.
Rational rational_inverse(const Rational& r);

}  // namespace treehom
