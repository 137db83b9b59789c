#pragma once

#include <gmpxx.h>

#include <compare>
#include <optional>
#include <string>

#include "error.hpp"

namespace martlab {

// Exact rational arithmetic everywhere; doubles only appear in Monte Carlo
// estimates and display approximations.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

// Parses "p/q" or "p" (with optional sign). Decimal points are not accepted:
// every number in the exact engine is a ratio of integers.
inline Rational rat_parse(const std::string& s) {
  if (s.empty()) fail(Errc::parse, "empty rational literal");
  Rational q;
  if (q.set_str(s, 10) != 0) fail(Errc::parse, "bad rational literal: '" + s + "'");
  if (q.get_den() == 0) fail(Errc::parse, "zero denominator: '" + s + "'");
  q.canonicalize();
  return q;
}

inline std::string rat_str(const Rational& q) { return q.get_str(); }

inline double rat_double(const Rational& q) { return q.get_d(); }

inline Rational rat_abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

inline Rational rat_min(const Rational& a, const Rational& b) { return a < b ? a : b; }
inline Rational rat_max(const Rational& a, const Rational& b) { return a > b ? a : b; }

// Floor of a nonnegative rational as a long.
inline long rat_floor(const Rational& q) {
  mpz_class z;
  mpz_fdiv_q(z.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  if (!z.fits_slong_p()) fail(Errc::invalid_argument, "rational floor out of range");
  return z.get_si();
}

inline long rat_ceil(const Rational& q) {
  mpz_class z;
  mpz_cdiv_q(z.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  if (!z.fits_slong_p()) fail(Errc::invalid_argument, "rational ceil out of range");
  return z.get_si();
}

// A time in [0, +inf]. Stopping times and jump epochs live here; +inf is a
// first-class value, never a sentinel rational.
struct ExtTime {
  bool infinite = false;
  Rational t;  // meaningful only when !infinite

  static ExtTime inf() { return ExtTime{true, Rational(0)}; }
  static ExtTime at(Rational v) { return ExtTime{false, std::move(v)}; }

  bool is_finite() const { return !infinite; }

  friend bool operator==(const ExtTime& a, const ExtTime& b) {
    if (a.infinite || b.infinite) return a.infinite == b.infinite;
    return a.t == b.t;
  }
  friend bool operator<(const ExtTime& a, const ExtTime& b) {
    if (a.infinite) return false;
    if (b.infinite) return true;
    return a.t < b.t;
  }
  friend bool operator<=(const ExtTime& a, const ExtTime& b) { return a < b || a == b; }
  friend bool operator>(const ExtTime& a, const ExtTime& b) { return b < a; }
  friend bool operator>=(const ExtTime& a, const ExtTime& b) { return b <= a; }

  friend ExtTime min(const ExtTime& a, const ExtTime& b) { return a < b ? a : b; }
  friend ExtTime max(const ExtTime& a, const ExtTime& b) { return a < b ? b : a; }

  std::string str() const { return infinite ? "inf" : rat_str(t); }
};

inline ExtTime ext_parse(const std::string& s) {
  if (s == "inf" || s == "infinity") return ExtTime::inf();
  return ExtTime::at(rat_parse(s));
}

// Closed rational interval [lo, hi]; used for masses that are provably
// irrational (e.g. tail mass at infinity) but rationally bracketed.
struct RatInterval {
  Rational lo;
  Rational hi;
  bool contains(const Rational& x) const { return lo <= x && x <= hi; }
  std::string str() const { return "[" + rat_str(lo) + ", " + rat_str(hi) + "]"; }
};

}  // namespace martlab
