#include "treehom/rational.hpp"

#include <cctype>

#include "treehom/errors.hpp"

namespace treehom {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s = text;
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s = s.substr(1);
  }
  std::string num = s, den = "1";
  if (auto slash = s.find('/'); slash != std::string::npos) {
    num = s.substr(0, slash);
    den = s.substr(slash + 1);
  }
  if (!all_digits(num) || !all_digits(den))
    throw ParseError("bad rational literal: '" + text + "'");
  boost::multiprecision::cpp_int n(num), d(den);
  if (d == 0) throw ParseError("zero denominator in '" + text + "'");
  Rational r(n, d);
  return negative ? Rational(-r) : r;
}

std::string rational_str(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

Rational rational_inverse(const Rational& r) {
  if (r == 0) throw DivisionByZeroError("inverse of 0");
  return Rational(1) / r;
}

}  // namespace treehom
