#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>

#include "equitycells/error.hpp"

namespace equitycells {

/// Exact arbitrary-precision rational. Always kept in canonical form.
using Rational = mpq_class;

/// n/d in canonical form. mpq_class(n, d) alone does not reduce, and GMP arithmetic on
/// unreduced operands is undefined.
inline Rational make_rational(long n, long d) {
  if (d == 0) throw DomainError("zero denominator");
  Rational r(n, d);
  r.canonicalize();
  return r;
}

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

inline Rational pow10(long e) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(e));
  return Rational(p);
}

}  // namespace detail

/// Parses "num/den", an integer, or a decimal literal ("0.06", ".9", "-1.5e-3")
/// into an exact rational. Throws ParseError on anything else.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t lead = 0;
  while (lead < s.size() && std::isspace(static_cast<unsigned char>(s[lead]))) ++lead;
  s.erase(0, lead);
  if (s.empty()) throw ParseError("empty rational literal");

  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::string_view num(s.data(), slash);
    std::string_view den(s.data() + slash + 1, s.size() - slash - 1);
    std::string_view num_digits = num;
    if (!num_digits.empty() && (num_digits[0] == '-' || num_digits[0] == '+'))
      num_digits.remove_prefix(1);
    if (!detail::all_digits(num_digits) || !detail::all_digits(den))
      throw ParseError("malformed rational literal '" + s + "'");
    mpz_class n(std::string(num[0] == '+' ? num.substr(1) : num), 10);
    mpz_class d(std::string(den), 10);
    if (d == 0) throw ParseError("zero denominator in '" + s + "'");
    Rational r(n, d);
    r.canonicalize();
    return r;
  }

  std::string_view rest(s);
  bool negative = false;
  if (rest[0] == '-' || rest[0] == '+') {
    negative = rest[0] == '-';
    rest.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = rest.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp = rest.substr(e + 1);
    bool exp_negative = false;
    if (!exp.empty() && (exp[0] == '-' || exp[0] == '+')) {
      exp_negative = exp[0] == '-';
      exp.remove_prefix(1);
    }
    if (!detail::all_digits(exp) || exp.size() > 6)
      throw ParseError("malformed exponent in '" + s + "'");
    exponent = std::stol(std::string(exp));
    if (exp_negative) exponent = -exponent;
    rest = rest.substr(0, e);
  }
  std::string_view int_part = rest, frac_part;
  if (auto dot = rest.find('.'); dot != std::string_view::npos) {
    int_part = rest.substr(0, dot);
    frac_part = rest.substr(dot + 1);
  }
  if (int_part.empty() && frac_part.empty())
    throw ParseError("malformed rational literal '" + s + "'");
  if ((!int_part.empty() && !detail::all_digits(int_part)) ||
      (!frac_part.empty() && !detail::all_digits(frac_part)))
    throw ParseError("malformed rational literal '" + s + "'");

  std::string digits = std::string(int_part) + std::string(frac_part);
  mpz_class mantissa(digits.empty() ? std::string("0") : digits, 10);
  long scale = exponent - static_cast<long>(frac_part.size());
  Rational r(mantissa);
  if (scale > 0) r *= detail::pow10(scale);
  if (scale < 0) r /= detail::pow10(-scale);
  if (negative) r = -r;
  return r;
}

/// Canonical exact text: "n" for integers, "n/d" otherwise. Round-trips through parse_rational.
inline std::string to_string(const Rational& r) { return r.get_str(); }

/// Decimal rendering rounded half away from zero to `places` fractional digits.
inline std::string to_decimal(const Rational& r, int places = 12) {
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(places));
  Rational scaled = abs(r) * scale + Rational(1, 2);
  mpz_class q = scaled.get_num() / scaled.get_den();
  std::string digits = q.get_str();
  if (static_cast<int>(digits.size()) <= places)
    digits.insert(0, static_cast<std::size_t>(places + 1) - digits.size(), '0');
  std::string out = digits.substr(0, digits.size() - static_cast<std::size_t>(places));
  if (places > 0) out += "." + digits.substr(digits.size() - static_cast<std::size_t>(places));
  if (sgn(r) < 0 && q != 0) out.insert(0, "-");
  return out;
}

}  // namespace equitycells
