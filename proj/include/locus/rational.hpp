// Copyright 2026 The Locus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exact rational arithmetic used for cycle sums, throughput bounds and the
// power/capacity calculators. Values are converted to floating point only
// when a report is emitted.

#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace locus {

using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  return Rational(BigInt(num), BigInt(den));
}

inline Rational from_uint64(std::uint64_t v) {
  return Rational(BigInt(v));
}

// Exact value of a finite double (every double is a dyadic rational).
inline Rational from_double_exact(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
  return Rational(v);
}

inline double to_double(const Rational& r) {
  return r.convert_to<double>();
}

// Parses a decimal literal such as "46.98", "-3", "2.2e9" or "1.5E-3" into
// the exact rational it denotes. Also accepts "p/q".
inline Rational parse_decimal(std::string_view text) {
  auto fail = [&] {
    throw std::invalid_argument("not a decimal number: '" + std::string(text) + "'");
  };
  if (text.empty()) fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash));
    Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) fail();
    return num / den;
  }
  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') {
    negative = text[i] == '-';
    ++i;
  }
  BigInt digits = 0;
  long scale = 0;
  bool any_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = digits * 10 + (c - '0');
      any_digit = true;
      if (seen_point) --scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) fail();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') fail();
    ++i;
    bool exp_negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      exp_negative = text[i] == '-';
      ++i;
    }
    if (i == text.size()) fail();
    long exponent = 0;
    for (; i < text.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) fail();
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > 4000) fail();
    }
    scale += exp_negative ? -exponent : exponent;
  }
  BigInt ten_pow = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(scale < 0 ? -scale : scale));
  Rational r = scale < 0 ? Rational(digits, ten_pow) : Rational(digits * ten_pow);
  return negative ? Rational(-r) : r;
}

inline BigInt floor_big(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  BigInt q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

// Rounds half-to-even at `digits` decimals and renders as fixed-point text.
inline std::string format_fixed(const Rational& r, unsigned digits = 2) {
  BigInt scale = boost::multiprecision::pow(BigInt(10), digits);
  Rational scaled = r * Rational(scale);
  BigInt lo = floor_big(scaled);
  Rational frac = scaled - Rational(lo);
  Rational half(BigInt(1), BigInt(2));
  if (frac > half || (frac == half && (lo % 2 != 0))) lo += 1;

  bool negative = lo < 0;
  if (negative) lo = -lo;
  std::string body = lo.str();
  if (digits > 0) {
    if (body.size() <= digits) body.insert(0, digits + 1 - body.size(), '0');
    body.insert(body.size() - digits, ".");
  }
  return negative ? "-" + body : body;
}

// "p/q" (or "p" when integral), lossless.
inline std::string to_exact_string(const Rational& r) {
  return r.str();
}

}  // namespace locus
