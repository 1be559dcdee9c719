#include "mms/rational.hpp"

#include <cctype>

namespace mms {

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  const auto bad = [&] {
    return std::invalid_argument("cannot parse rational literal '" + text + "'");
  };
  std::string s = text;
  // strip surrounding whitespace
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  s = s.substr(b, e - b);
  if (s.empty()) throw bad();

  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const std::string num = s.substr(0, slash);
    const std::string den = s.substr(slash + 1);
    try {
      const mpz_class zn(num);
      const mpz_class zd(den);
      if (sgn(zd) == 0) throw bad();
      Rational q(zn, zd);
      q.canonicalize();
      return q;
    } catch (const std::invalid_argument&) {
      throw bad();
    }
  }

  const auto dot = s.find('.');
  if (dot == std::string::npos) {
    try {
      return Rational(mpz_class(s));
    } catch (const std::invalid_argument&) {
      throw bad();
    }
  }

  // decimal notation, e.g. "-12.345" -> -12345/1000, parsed exactly
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  const std::size_t frac_len = s.size() - dot - 1;
  if (frac_len == 0 || digits.empty()) throw bad();
  bool neg = false;
  if (digits[0] == '+' || digits[0] == '-') {
    neg = digits[0] == '-';
    digits = digits.substr(1);
  }
  if (digits.empty()) throw bad();
  for (char c : digits)
    if (!std::isdigit(static_cast<unsigned char>(c))) throw bad();
  mpz_class num(digits);
  mpz_class den(1);
  mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
  Rational q(num, den);
  q.canonicalize();
  return neg ? Rational(-q) : q;
}

std::string to_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

}  // namespace mms
